import pytest

from objects.errors import ConfigError
from objects.training.config import TrainConfig
from objects.training.schedule import lr_at

CFG = TrainConfig(peak_lr=1e-3, warmup_steps=10)
TOTAL = 110


@pytest.mark.parametrize("step,expected", [(0, 0.0), (5, 5e-4), (10, 1e-3), (60, 5e-4), (110, 0.0)])
def test_warmup_then_cosine(step, expected):
    assert lr_at(step, CFG, TOTAL) == pytest.approx(expected, abs=1e-15)


def test_monotone_after_warmup():
    rates = [lr_at(step, CFG, TOTAL) for step in range(10, TOTAL + 1)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_step_outside_schedule():
    with pytest.raises(ConfigError):
        lr_at(TOTAL + 1, CFG, TOTAL)


def test_warmup_must_fit():
    with pytest.raises(ConfigError):
        lr_at(0, CFG, 10)
