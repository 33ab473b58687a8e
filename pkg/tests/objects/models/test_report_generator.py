import numpy as np
import pytest

from objects.autograd.gradcheck import check_gradients
from objects.autograd.tensor import Tensor
from objects.datasets.images import ImageTensor
from objects.datasets.vocabulary import BOS_ID, EOS_ID, PAD_ID, UNK_ID
from objects.decoding.beam import DecodeConfig
from objects.errors import ConfigError
from objects.models.language import count_ptuning_params
from objects.models.parameters import ParameterSet
from objects.models.report_generator import ReportGenerator
from objects.training.loss import nll_loss
from tests.conftest import tiny_model_config


@pytest.fixture
def generator(tiny_config, tiny_vocab):
    model = ReportGenerator.build(tiny_config, tiny_vocab, seed=0, decode=DecodeConfig(beam_size=2, min_len=2, max_len=10))
    # open the cross-attention path so the image matters at init
    rng = np.random.default_rng(1)
    weight = model.params["qformer.blocks.2.cross_attn.out.weight"]
    weight.data = rng.normal(scale=0.2, size=weight.shape)
    return model


def batch_inputs(model, seed=2):
    rng = np.random.default_rng(seed)
    pixels = rng.random((2, 28, 28, 1))
    targets = np.array([model.vocab.encode("ct image showing a circle", add_eos=True),
                        model.vocab.encode("x-ray image showing a dot", add_eos=True)])
    return pixels, targets


def test_build_fills_vocab_size(generator, tiny_vocab):
    assert generator.architecture.lm.vocab_size == len(tiny_vocab)


def test_build_rejects_vocab_mismatch(tiny_config, tiny_vocab):
    config = tiny_config.model_copy(update={"lm": tiny_config.lm.model_copy(update={"vocab_size": 999})})
    with pytest.raises(ConfigError):
        ReportGenerator.build(config, tiny_vocab, seed=0)


def test_same_seed_same_parameters(tiny_config, tiny_vocab):
    first = ReportGenerator.build(tiny_config, tiny_vocab, seed=5).params.snapshot()
    second = ReportGenerator.build(tiny_config, tiny_vocab, seed=5).params.snapshot()
    assert first == second


@pytest.mark.parametrize("component", ["vision.", "qformer.", "soft_prompts.", "lm."])
def test_end_to_end_gradients(generator, component):
    pixels, targets = batch_inputs(generator)
    pad_mask = targets == PAD_ID

    def loss():
        return nll_loss(generator.logits(generator.to_tensor(pixels), targets), targets, pad_mask).mean

    rng = np.random.default_rng(3)
    names = [name for name, _ in generator.params.items(component)]
    chosen = [generator.params[name] for name in rng.choice(names, size=min(10, len(names)), replace=False)]
    assert check_gradients(loss, chosen, max_entries=1, rng=rng) < 1e-4


def test_loss_gradient_reaches_the_image(generator):
    pixels, targets = batch_inputs(generator)
    image = Tensor(pixels, requires_grad=True)
    nll_loss(generator.logits(image, targets), targets, targets == PAD_ID).mean.backward()
    assert image.grad is not None and np.abs(image.grad).max() > 0
    assert np.abs(generator.params["vision.patch_embed.weight"].grad).max() > 0


def test_parameter_report(generator):
    report = generator.parameter_report()
    assert set(report) == {"vision", "qformer", "lm", "soft_prompts"}
    assert report["soft_prompts"] == (count_ptuning_params(2, 2, 16),) * 2
    generator.params.set_trainable("lm.", False)
    total, trainable = generator.parameter_report()["lm"]
    assert total > 0 and trainable == 0


def test_generate_report_respects_length_limits(generator):
    image = ImageTensor.from_array(np.random.default_rng(4).random((28, 28)))
    decode = generator.decode.model_copy(update={"beam_size": 2, "min_len": 3, "max_len": 6})
    hypotheses = generator.beam_search(image, decode)
    assert 1 <= len(hypotheses) <= 2
    for hypothesis in hypotheses:
        assert 3 <= hypothesis.length <= 6
        assert hypothesis.tokens[-1] == EOS_ID
        assert not set(hypothesis.content) & {PAD_ID, BOS_ID, UNK_ID, EOS_ID}
    greedy = generator.greedy(image, decode)
    assert 3 <= greedy.length <= 6


def test_session_resizes_the_image(generator):
    large = ImageTensor.from_array(np.random.default_rng(5).random((56, 56)))
    report = generator.generate_report(large, greedy=True)
    assert isinstance(report, str)


def test_float32_model_builds(tiny_vocab):
    model = ReportGenerator.build(tiny_model_config(dtype="float32"), tiny_vocab, seed=0)
    assert isinstance(model.params, ParameterSet)
    assert model.params["lm.head.weight"].dtype == np.float32
