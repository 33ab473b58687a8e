import pytest

from objects.datasets.synth import SynthSpec, generate_corpus
from tests.conftest import tiny_run_config
from tools.experiments import train


@pytest.fixture(scope="session")
def trained_run(tmp_path_factory):
    """A corpus plus one short tiny training run shared by the tool tests."""
    root = tmp_path_factory.mktemp("run")
    data = root / "corpus"
    generate_corpus(SynthSpec(num_samples=30, image_size=28, seed=3, prompt_text="Question: what is shown? Answer:"), data)
    config = root / "run.txt"
    config.write_text(tiny_run_config(epochs=1).to_text())
    out = root / "train"
    result = train(data=str(data), out=str(out), config=str(config), seed=5)
    assert result.success, result.error
    return {"data": data, "config": config, "out": out, "result": result}
