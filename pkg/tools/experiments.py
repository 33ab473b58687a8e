import weave
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from objects.config import RunConfig
from objects.datasets.batching import Sample, load_samples
from objects.datasets.synth import load_manifest
from objects.datasets.vocabulary import Vocabulary
from objects.errors import MedcapError
from objects.models.report_generator import ReportGenerator
from objects.scorers.rouge import corpus_rouge1
from objects.training.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from objects.training.config import ABLATION_GRID
from objects.training.trainer import TrainResult, format_parameter_report, pretrain_language_model
from objects.training.trainer import train as train_generator
from tools.report_writer import build_generator, check_provenance, decode_records
from tools.return_type import ToolResult

ABLATION_COLUMNS = (
    "row", "image_size", "vision_encoder", "language_model", "total_params", "trainable_params",
    "val_bertscore", "val_rouge1", "test_bertscore", "test_rouge1",
)

EXPERIMENT_TOOLS = {
    "train": {
        "type": "function",
        "function": {
            "name": "experiments-train",
            "description": """Trains one report generator. Writes to the output directory:
            - run_config.txt (the exact configuration used)
            - checkpoint.qbck, metrics.tsv (step, lr, loss_mean, loss_sum)
            - params.tsv (Total and Trainable parameters per component)
            """,
            "parameters": {
                "type": "object",
                "properties": {
                    "config": {"type": "string", "description": "key=value run config (defaults apply when omitted)"},
                    "data": {"type": "string", "description": "Corpus directory written by gen-data"},
                    "out": {"type": "string", "description": "Output directory"},
                    "seed": {"type": "integer", "description": "Overrides train.seed"}
                },
                "required": ["data", "out"]
            }
        }
    },
    "ablate": {
        "type": "function",
        "function": {
            "name": "experiments-ablate",
            "description": """Runs the five-row trainable-component grid (from-scratch LM, frozen LM, P-tuning,
            vision + P-tuning, vision + P-tuning at a larger image size), scores every row on the
            validation and test splits and writes ablation.tsv.
            """,
            "parameters": {
                "type": "object",
                "properties": {
                    "config": {"type": "string", "description": "Base key=value run config; each row overrides the ablation section"},
                    "data": {"type": "string", "description": "Corpus directory written by gen-data"},
                    "out": {"type": "string", "description": "Output directory (one sub-directory per row)"},
                    "seed": {"type": "integer", "description": "Overrides train.seed"},
                    "workers": {"type": "integer", "default": 1, "description": "Grid rows trained in parallel processes"}
                },
                "required": ["data", "out"]
            }
        }
    }
}


def load_run_config(config: Optional[str], seed: Optional[int]) -> RunConfig:
    run_config = RunConfig.from_file(config) if config else RunConfig()
    if seed is not None:
        run_config = run_config.with_overrides(train={"seed": seed})
    return run_config


def _corpus(run_config: RunConfig, data_dir: str) -> Tuple[Vocabulary, List[Sample], RunConfig]:
    vocab = Vocabulary.load(Path(data_dir) / "vocab.txt")
    check_provenance(run_config, vocab)
    run_config = run_config.with_overrides(data={"vocab_hash": vocab.fingerprint()})
    return vocab, load_samples(data_dir, "train", vocab, run_config.lm.prompt_text), run_config


def run_training(
    run_config: RunConfig,
    data_dir: str,
    out_dir: str,
    pretrained_lm: Optional[Mapping[str, np.ndarray]] = None,
    pretrain: bool = True,
) -> Tuple[ReportGenerator, RunConfig, TrainResult]:
    """Train one configuration and write its run directory."""
    vocab, samples, run_config = _corpus(run_config, data_dir)
    model = build_generator(run_config, vocab)
    if pretrained_lm is not None:
        model.params.load_state_dict(pretrained_lm, strict=False)
    elif pretrain and run_config.ablation.pretrained_lm and run_config.train.pretrain_steps:
        pretrain_language_model(samples, model, run_config.train)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_config.txt").write_text(run_config.to_text(), encoding="utf-8")
    metrics_path = out / "metrics.tsv"
    metrics_path.write_text("", encoding="utf-8")
    result = train_generator(samples, model, run_config.ablation, run_config.train, metrics_path=metrics_path)
    result.checkpoint.run_config = run_config.to_text()
    save_checkpoint(out / "checkpoint.qbck", result.checkpoint)
    (out / "params.tsv").write_text(format_parameter_report(result.parameter_report), encoding="utf-8")
    return model, run_config, result


def score_split(model: ReportGenerator, run_config: RunConfig, data_dir: str, split: str) -> Tuple[Optional[float], List[str]]:
    records = load_manifest(data_dir, split)
    if run_config.data.eval_limit:
        records = records[:run_config.data.eval_limit]
    if not records:
        return None, []
    reports = decode_records(model, data_dir, records, run_config.decode)
    summary = corpus_rouge1([(report, record.caption) for report, record in zip(reports, records)])
    return summary["rouge1_f1"], reports


def pretrain_stage(run_config: RunConfig, data_dir: str, out_dir: str) -> str:
    """Text-only LM pretraining shared by every row that starts from a pretrained LM."""
    vocab, samples, run_config = _corpus(run_config, data_dir)
    model = build_generator(run_config, vocab)
    history = pretrain_language_model(samples, model, run_config.train)
    path = Path(out_dir) / "pretrained_lm.qbck"
    save_checkpoint(path, Checkpoint(params={name: t.data for name, t in model.params.items("lm.")}, run_config=run_config.to_text()))
    print(f"Pretrained language model: {len(history)} steps, final loss {history[-1].loss_mean:.4f}")
    return str(path)


def run_ablation_row(row: int, base_config: str, data_dir: str, out_dir: str, pretrained_path: Optional[str]) -> Dict[str, Any]:
    """One grid row end to end; module-level so it can run in a worker process."""
    spec = ABLATION_GRID[row]
    run_config = RunConfig.from_text(base_config).with_overrides(ablation=spec.model_dump())
    pretrained = load_checkpoint(pretrained_path).params if spec.pretrained_lm and pretrained_path else None
    row_dir = Path(out_dir) / f"row_{row}"
    model, run_config, result = run_training(run_config, data_dir, str(row_dir), pretrained_lm=pretrained, pretrain=False)
    val_rouge, val_reports = score_split(model, run_config, data_dir, "val")
    test_rouge, test_reports = score_split(model, run_config, data_dir, "test")
    (row_dir / "predictions_val.txt").write_text("".join(r + "\n" for r in val_reports), encoding="utf-8")
    (row_dir / "predictions_test.txt").write_text("".join(r + "\n" for r in test_reports), encoding="utf-8")
    report = result.parameter_report
    return {
        "row": row,
        "image_size": spec.image_size,
        "vision_encoder": spec.vision_label,
        "language_model": spec.language_label,
        "total_params": sum(total for total, _ in report.values()),
        "trainable_params": sum(trainable for _, trainable in report.values()),
        "val_bertscore": "n/a",
        "val_rouge1": val_rouge,
        "test_bertscore": "n/a",
        "test_rouge1": test_rouge,
        "final_loss": result.final_loss,
    }


def format_ablation_table(rows: List[Dict[str, Any]]) -> str:
    lines = ["\t".join(ABLATION_COLUMNS)]
    for row in rows:
        cells = []
        for column in ABLATION_COLUMNS:
            value = row[column]
            cells.append("-" if value is None else f"{value:.6f}" if isinstance(value, float) else str(value))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


@weave.op(name="experiments-train")
def train(*, data: str, out: str, config: Optional[str] = None, seed: Optional[int] = None) -> ToolResult[Dict[str, Any]]:
    """
    Train a report generator from a run config.

    Returns:
        Step count, final loss and the parameter report
    """
    try:
        run_config = load_run_config(config, seed)
        _, _, result = run_training(run_config, data, out)
        print(f"Trained {result.total_steps} steps, final loss {result.final_loss:.4f}; wrote {out}")
        return ToolResult.ok({
            "out": out,
            "steps": result.total_steps,
            "final_loss": result.final_loss,
            "parameters": {name: {"total": t, "trainable": tr} for name, (t, tr) in result.parameter_report.items()},
        })
    except MedcapError as e:
        return ToolResult.from_error(e)
    except Exception as e:
        return ToolResult.err(f"Failed to train: {str(e)}")


@weave.op(name="experiments-ablate")
def ablate(*, data: str, out: str, config: Optional[str] = None, seed: Optional[int] = None, workers: int = 1) -> ToolResult[Dict[str, Any]]:
    """
    Run the trainable-component grid and write ablation.tsv.

    Returns:
        The table path and its rows
    """
    try:
        run_config = load_run_config(config, seed)
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / "run_config.txt").write_text(run_config.to_text(), encoding="utf-8")
        needs_pretraining = any(spec.pretrained_lm for spec in ABLATION_GRID.values())
        pretrained_path = None
        if needs_pretraining and run_config.train.pretrain_steps:
            pretrained_path = pretrain_stage(run_config, data, out)
        base = run_config.to_text()
        row_ids = sorted(ABLATION_GRID)
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_ablation_row, row, base, data, out, pretrained_path) for row in row_ids]
                rows = [future.result() for future in futures]
        else:
            rows = [run_ablation_row(row, base, data, out, pretrained_path) for row in row_ids]
        table = format_ablation_table(rows)
        (Path(out) / "ablation.tsv").write_text(table, encoding="utf-8")
        print(table, end="")
        return ToolResult.ok({"table": str(Path(out) / "ablation.tsv"), "rows": rows})
    except MedcapError as e:
        return ToolResult.from_error(e)
    except Exception as e:
        return ToolResult.err(f"Failed to run the ablation grid: {str(e)}")
