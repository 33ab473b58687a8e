import weave
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Tuple

from pydantic import ValidationError

from objects.config import RunConfig
from objects.datasets.images import load_pgm
from objects.datasets.synth import CorpusRecord, load_manifest
from objects.datasets.vocabulary import Vocabulary
from objects.decoding.beam import DecodeConfig
from objects.errors import ConfigError, MedcapError, ProvenanceError
from objects.models.report_generator import ReportGenerator
from objects.training.checkpoint import load_checkpoint
from tools.return_type import ToolResult
from utils.helpers import sub_seed

REPORT_WRITER_TOOLS = {
    "generate": {
        "type": "function",
        "function": {
            "name": "report_writer-generate",
            "description": """Writes one generated report per line for a corpus split, aligned with the split manifest.
            Uses constrained beam search (repetition penalty, minimum and maximum length).
            """,
            "parameters": {
                "type": "object",
                "properties": {
                    "checkpoint": {"type": "string", "description": "QBCK checkpoint written by train"},
                    "data": {"type": "string", "description": "Corpus directory"},
                    "split": {"type": "string", "enum": ["val", "test"], "default": "val", "description": "Split to decode"},
                    "out": {"type": "string", "description": "Output text file"},
                    "beam": {"type": "integer", "default": 5, "description": "Beam size"},
                    "rep_penalty": {"type": "number", "default": 2.0, "description": "Repetition penalty (1 disables)"},
                    "min_len": {"type": "integer", "default": 8, "description": "Minimum report length in tokens"},
                    "max_len": {"type": "integer", "default": 64, "description": "Maximum report length in tokens"},
                    "greedy": {"type": "boolean", "default": False, "description": "Greedy decoding instead of beam search"},
                    "limit": {"type": "integer", "default": 0, "description": "Decode only the first N samples (0 = all)"},
                    "workers": {"type": "integer", "default": 1, "description": "Threads decoding images concurrently"}
                },
                "required": ["checkpoint", "data", "out"]
            }
        }
    }
}


def check_provenance(run_config: RunConfig, vocab: Vocabulary) -> None:
    expected = run_config.data.vocab_hash
    if expected and expected != vocab.fingerprint():
        raise ProvenanceError(
            f"vocabulary hash {vocab.fingerprint()[:12]} does not match the run's {expected[:12]}; "
            "the checkpoint was trained on a different corpus"
        )


def build_generator(run_config: RunConfig, vocab: Vocabulary) -> ReportGenerator:
    return ReportGenerator.build(
        run_config.build_model_config(), vocab, seed=sub_seed(run_config.train.seed, "init"), decode=run_config.decode
    )


def restore_generator(checkpoint_path: str, data_dir: str) -> Tuple[ReportGenerator, RunConfig]:
    """Rebuild the network a checkpoint was trained with and load its weights."""
    checkpoint = load_checkpoint(checkpoint_path)
    run_config = RunConfig.from_text(checkpoint.run_config)
    vocab = Vocabulary.load(Path(data_dir) / "vocab.txt")
    check_provenance(run_config, vocab)
    model = build_generator(run_config, vocab)
    model.params.load_state_dict(checkpoint.params)
    return model, run_config


def decode_records(
    model: ReportGenerator,
    data_dir: str,
    records: List[CorpusRecord],
    cfg: DecodeConfig,
    greedy: bool = False,
    workers: int = 1,
) -> List[str]:
    root = Path(data_dir)

    def _one(record: CorpusRecord) -> str:
        image = load_pgm(root / record.image_path)
        hypothesis = model.greedy(image, cfg) if greedy else model.beam_search(image, cfg)[0]
        return model.describe(hypothesis)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(_one, records))


@weave.op(name="report_writer-generate")
def generate(
    *,
    checkpoint: str,
    data: str,
    out: str,
    split: str = "val",
    beam: int = 5,
    rep_penalty: float = 2.0,
    min_len: int = 8,
    max_len: int = 64,
    greedy: bool = False,
    limit: int = 0,
    workers: int = 1,
) -> ToolResult[Dict[str, Any]]:
    """
    Decode every image of a split and write the reports, one per line.

    Returns:
        The output path and the number of reports written
    """
    try:
        try:
            cfg = DecodeConfig(beam_size=beam, repetition_penalty=rep_penalty, min_len=min_len, max_len=max_len)
        except ValidationError as e:
            raise ConfigError(f"invalid decoding settings: {e}") from e
        model, _ = restore_generator(checkpoint, data)
        records = load_manifest(data, split)
        if limit:
            records = records[:limit]
        reports = decode_records(model, data, records, cfg, greedy=greedy, workers=workers)
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            for report in reports:
                f.write(report + "\n")
        print(f"Wrote {len(reports)} {split} reports to {out}")
        return ToolResult.ok({"out": out, "reports": len(reports)})
    except MedcapError as e:
        return ToolResult.from_error(e)
    except Exception as e:
        return ToolResult.err(f"Failed to generate reports: {str(e)}")
