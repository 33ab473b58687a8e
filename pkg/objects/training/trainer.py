import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import weave

from objects.autograd.tensor import backward
from objects.datasets.batching import Sample, make_batches
from objects.errors import ConfigError, EmptyCorpusError
from objects.models.language import SOFT_PREFIX
from objects.models.report_generator import ReportGenerator
from objects.training.checkpoint import Checkpoint
from objects.training.config import AblationSpec, TrainConfig
from objects.training.loss import nll_loss
from objects.training.optimizer import AdamW
from objects.training.schedule import lr_at
from utils.helpers import sub_seed


@dataclass
class StepLog:
    step: int
    lr: float
    loss_mean: float
    loss_sum: float

    def to_line(self) -> str:
        return f"{self.step}\t{self.lr:.8g}\t{self.loss_mean:.8g}\t{self.loss_sum:.8g}\n"


@dataclass
class TrainResult:
    history: List[StepLog] = field(default_factory=list)
    total_steps: int = 0
    parameter_report: Dict[str, tuple] = field(default_factory=dict)
    checkpoint: Optional[Checkpoint] = None

    @property
    def final_loss(self) -> float:
        return self.history[-1].loss_mean if self.history else float("nan")


def apply_ablation(model: ReportGenerator, spec: AblationSpec) -> None:
    """Set trainability per component; the Q-Former always learns."""
    params = model.params
    params.set_trainable("vision.", spec.vision_trainable)
    params.set_trainable("qformer.", spec.qformer_trainable)
    params.set_trainable("lm.", spec.lm_mode == "full")
    params.set_trainable(f"{SOFT_PREFIX}.", spec.lm_mode == "ptuning")


def total_steps(num_samples: int, cfg: TrainConfig) -> int:
    steps = cfg.epochs * math.ceil(num_samples / cfg.batch_size)
    return min(steps, cfg.max_steps) if cfg.max_steps else steps


def format_parameter_report(report: Dict[str, tuple]) -> str:
    """TSV with Total and Trainable columns per component plus an `all` row."""
    lines = ["component\ttotal\ttrainable"]
    for name, (total, trainable) in report.items():
        lines.append(f"{name}\t{total}\t{trainable}")
    lines.append(f"all\t{sum(t for t, _ in report.values())}\t{sum(t for _, t in report.values())}")
    return "\n".join(lines) + "\n"


def _run_steps(
    samples: Sequence[Sample],
    cfg: TrainConfig,
    steps: int,
    shuffle_seed: int,
    image_size: int,
    optimizer: AdamW,
    loss_fn: Callable,
    augment_rng: Optional[np.random.Generator],
    metrics_path: Optional[Union[str, os.PathLike]],
    on_step: Optional[Callable[[StepLog], None]],
) -> List[StepLog]:
    if cfg.warmup_steps >= steps:
        raise ConfigError(f"warmup_steps={cfg.warmup_steps} must be below the {steps} training steps")
    history: List[StepLog] = []
    metrics = open(metrics_path, "a", encoding="utf-8") if metrics_path else None
    try:
        epoch = 0
        while len(history) < steps:
            for batch in make_batches(samples, cfg.batch_size, shuffle_seed, cfg.max_report_len, image_size,
                                      epoch=epoch, augment_rng=augment_rng):
                optimizer.params.zero_grad()
                result = loss_fn(batch)
                backward(result.mean)
                # Offset by one point so neither the first nor the last update runs at lr = 0.
                lr = lr_at(len(history) + 1, cfg, steps + 1)
                optimizer.step(lr)
                log = StepLog(len(history), lr, result.mean.item(), result.total)
                history.append(log)
                if metrics:
                    metrics.write(log.to_line())
                if on_step:
                    on_step(log)
                if len(history) >= steps:
                    break
            epoch += 1
    finally:
        if metrics:
            metrics.close()
    return history


@weave.op(name="training-train")
def train(
    samples: Sequence[Sample],
    model: ReportGenerator,
    spec: AblationSpec,
    cfg: TrainConfig,
    metrics_path: Optional[Union[str, os.PathLike]] = None,
    on_step: Optional[Callable[[StepLog], None]] = None,
) -> TrainResult:
    """Minimize the report NLL with AdamW under the row's trainability flags."""
    if not samples:
        raise EmptyCorpusError("training needs at least one sample")
    apply_ablation(model, spec)
    steps = total_steps(len(samples), cfg)
    optimizer = AdamW(model.params, cfg.weight_decay, cfg.grad_clip)
    augment_rng = np.random.default_rng(sub_seed(cfg.seed, "augment")) if cfg.augment else None

    def _loss(batch):
        logits = model.logits(model.to_tensor(batch.images), batch.target_ids)
        return nll_loss(logits, batch.target_ids, batch.pad_mask)

    history = _run_steps(samples, cfg, steps, sub_seed(cfg.seed, "shuffle"), model.architecture.image_size,
                         optimizer, _loss, augment_rng, metrics_path, on_step)
    checkpoint = Checkpoint(params=dict(model.params.state_dict()), optimizer=optimizer.state.to_records())
    return TrainResult(history=history, total_steps=steps, parameter_report=model.parameter_report(),
                       checkpoint=checkpoint)


@weave.op(name="training-pretrain_language_model")
def pretrain_language_model(
    samples: Sequence[Sample],
    model: ReportGenerator,
    cfg: TrainConfig,
    steps: Optional[int] = None,
) -> List[StepLog]:
    """Text-only language modeling of prompt + report behind K zero prefix rows.

    Stands in for the general-purpose pretraining a language foundation model
    arrives with; only `lm.` weights learn. The zero rows keep prompt and report
    at the positions they occupy once the Q-Former output takes their place.
    """
    if not samples:
        raise EmptyCorpusError("pretraining needs at least one sample")
    steps = cfg.pretrain_steps if steps is None else steps
    params = model.params
    for prefix in ("vision.", "qformer.", f"{SOFT_PREFIX}."):
        params.set_trainable(prefix, False)
    params.set_trainable("lm.", True)
    warmup = min(cfg.warmup_steps, max(0, steps // 10))
    schedule = cfg.model_copy(update={"warmup_steps": warmup, "augment": False})
    optimizer = AdamW(params, cfg.weight_decay, cfg.grad_clip)
    prompt_ids = model.prompt_ids()
    num_queries, d_lm = model.architecture.qformer.num_queries, model.architecture.lm.d_model

    def _loss(batch):
        blank = model.to_tensor(np.zeros((len(batch.target_ids), num_queries, d_lm)))
        logits = model.language.forward_lm(blank, prompt_ids, batch.target_ids)
        return nll_loss(logits, batch.target_ids, batch.pad_mask)

    return _run_steps(samples, schedule, steps, sub_seed(cfg.seed, "pretrain"), model.architecture.image_size,
                      optimizer, _loss, None, None, None)
