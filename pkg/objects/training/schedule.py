import math

from objects.errors import ConfigError
from objects.training.config import TrainConfig


def cosine_schedule(step: int, max_steps: int, peak: float) -> float:
    return peak * 0.5 * (1.0 + math.cos(math.pi * step / max_steps))


def lr_at(step: int, cfg: TrainConfig, total_steps: int) -> float:
    """Linear warmup to `peak_lr` at `warmup_steps`, then cosine annealing to 0 at `total_steps`."""
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    if cfg.warmup_steps >= total_steps:
        raise ConfigError(f"warmup_steps={cfg.warmup_steps} must be below total steps {total_steps}")
    if step < cfg.warmup_steps:
        return cfg.peak_lr * step / cfg.warmup_steps
    return cosine_schedule(step - cfg.warmup_steps, total_steps - cfg.warmup_steps, cfg.peak_lr)
