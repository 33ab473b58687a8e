import os
import sys
import pytest

# Get the project root directory
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Add the project root to the Python path
sys.path.insert(0, project_root)

from objects.config import RunConfig
from objects.datasets.batching import Sample
from objects.datasets.synth import SynthSpec, generate_corpus, render_sample
from objects.datasets.vocabulary import Vocabulary
from objects.models.config import LMConfig, ModelConfig, QFormerConfig, VisionConfig

TINY_PROMPT = "describe the image:"
TINY_CAPTIONS = [
    "ct image showing a circle in the center",
    "mri image showing a bar in the upper midline marked with white arrow",
    "x-ray image showing a dot in the lower periphery",
]


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the minutes-long training runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes-long end-to-end training run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def setup_test_env(monkeypatch):
    """Keep weave tracing off regardless of the developer's .env"""
    monkeypatch.delenv("WEAVE_TEAM", raising=False)
    monkeypatch.delenv("WEAVE_PROJECT", raising=False)


def tiny_model_config(dtype: str = "float64", soft_prompt_len: int = 2, image_size: int = 28,
                      attention_mask: str = "causal") -> ModelConfig:
    """A network small enough for finite differences: 28px images, 7px patches, width 16."""
    return ModelConfig(
        vision=VisionConfig(patch_size=7, d_v=16, depth=1, heads=2),
        qformer=QFormerConfig(num_queries=4, d_q=16, depth=2, heads=2, cross_attn_period=2, d_lm=16),
        lm=LMConfig(d_model=16, depth=2, heads=2, max_positions=64, prompt_text=TINY_PROMPT,
                    soft_prompt_len=soft_prompt_len, attention_mask=attention_mask),
        image_size=image_size,
        dtype=dtype,
    )


def tiny_run_config(**train) -> RunConfig:
    """RunConfig matching tiny_model_config, with short training."""
    values = {"batch_size": 4, "epochs": 2, "warmup_steps": 1, "pretrain_steps": 4, "augment": False}
    values.update(train)
    base = tiny_model_config()
    return RunConfig(
        vision=base.vision,
        qformer=base.qformer,
        lm=base.lm.model_copy(update={"prompt_text": "Question: what is shown? Answer:"}),
        model={"dtype": "float64"},
        train=values,
        decode={"beam_size": 2, "min_len": 2, "max_len": 12},
        ablation={"image_size": 28},
    )


@pytest.fixture
def tiny_config():
    return tiny_model_config()


@pytest.fixture
def tiny_vocab():
    return Vocabulary.build(TINY_CAPTIONS + [TINY_PROMPT])


@pytest.fixture
def toy_corpus(tmp_path):
    """A 30-sample corpus at 28px, written to a temporary directory."""
    spec = SynthSpec(num_samples=30, image_size=28, seed=3, prompt_text="Question: what is shown? Answer:")
    out = tmp_path / "corpus"
    generate_corpus(spec, out)
    return out


def synth_samples(count: int, seed: int = 3, image_size: int = 28, prompt: str = TINY_PROMPT):
    """In-memory samples plus a vocabulary covering them and the prompt."""
    spec = SynthSpec(num_samples=count, image_size=image_size, seed=seed, prompt_text=prompt)
    rendered = [render_sample(spec, index) for index in range(count)]
    vocab = Vocabulary.build([caption for _, caption in rendered] + [prompt])
    prompt_ids = tuple(vocab.encode(prompt))
    samples = [
        Sample(index, image, prompt_ids, tuple(vocab.encode(caption, add_eos=True)), caption)
        for index, (image, caption) in enumerate(rendered)
    ]
    return samples, vocab
