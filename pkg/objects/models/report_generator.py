from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import weave
from weave import Model

from objects.autograd.tensor import Tensor, no_grad
from objects.datasets.images import ImageTensor, load_pgm, resize
from objects.datasets.vocabulary import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocabulary
from objects.decoding.beam import BeamHypothesis, DecodeConfig, beam_search, greedy_decode
from objects.errors import ConfigError
from objects.models.config import ModelConfig
from objects.models.language import SOFT_PREFIX, LanguageModel
from objects.models.parameters import ParameterSet
from objects.models.qformer import QFormer
from objects.models.vision import VisionEncoder
from objects.prompts.report import ReportPrompt

COMPONENT_PREFIXES = {
    "vision": "vision.",
    "qformer": "qformer.",
    "lm": "lm.",
    "soft_prompts": f"{SOFT_PREFIX}.",
}
NEVER_GENERATED = (PAD_ID, BOS_ID, UNK_ID)


class ImageSession:
    """Decoding view of one image: the visual prefix is computed once."""

    def __init__(self, model: "ReportGenerator", image: ImageTensor):
        self.model = model
        self.prompt_ids = model.prompt_ids()
        with no_grad():
            self.prefix = model.visual_prefix(model.to_tensor(image.pixels[None])).data

    def next_token_logits(self, sequences) -> np.ndarray:
        count = len(sequences)
        generated = np.array([list(s) for s in sequences], dtype=np.int64).reshape(count, -1)
        # The trailing PAD is a placeholder target; only its logit row is read.
        targets = np.concatenate([generated, np.full((count, 1), PAD_ID, dtype=np.int64)], axis=1)
        with no_grad():
            prefix = Tensor(np.repeat(self.prefix, count, axis=0))
            logits = self.model.language.forward_lm(prefix, self.prompt_ids, targets)
        return logits.data[:, -1, :]


class ReportGenerator(Model):
    """Vision encoder -> Q-Former bridge -> P-tuned decoder, as one traced model."""
    architecture: ModelConfig
    prompt: ReportPrompt = ReportPrompt()
    decode: DecodeConfig = DecodeConfig()
    vocab: Any = None
    params: Any = None
    vision: Any = None
    qformer: Any = None
    language: Any = None

    @classmethod
    def build(cls, architecture: ModelConfig, vocab: Vocabulary, seed: int,
              decode: Optional[DecodeConfig] = None) -> "ReportGenerator":
        lm = architecture.lm
        if lm.vocab_size and lm.vocab_size != len(vocab):
            raise ConfigError(f"lm.vocab_size={lm.vocab_size} but the corpus vocabulary has {len(vocab)} tokens")
        architecture = architecture.model_copy(update={"lm": lm.model_copy(update={"vocab_size": len(vocab)})})
        rng = np.random.default_rng(seed)
        params = ParameterSet(architecture.dtype)
        vision = VisionEncoder(architecture.vision, architecture.image_size, architecture.channels, params, rng)
        qformer = QFormer(architecture.qformer, architecture.vision.d_v, vision.num_tokens, params, rng)
        language = LanguageModel(architecture.lm, params, rng)
        return cls(
            architecture=architecture,
            prompt=ReportPrompt(template=architecture.lm.prompt_text),
            decode=decode or DecodeConfig(),
            vocab=vocab,
            params=params,
            vision=vision,
            qformer=qformer,
            language=language,
        )

    def prompt_ids(self) -> List[int]:
        return self.prompt.token_ids(self.vocab)

    def to_tensor(self, pixels: np.ndarray) -> Tensor:
        return Tensor(np.asarray(pixels, dtype=self.params.dtype))

    def visual_prefix(self, pixels: Tensor) -> Tensor:
        """(B, H, W, C) pixels -> (B, K, d_lm)."""
        return self.qformer.bridge(self.vision.encode(pixels))

    def logits(self, pixels: Tensor, target_ids: np.ndarray) -> Tensor:
        return self.language.forward_lm(self.visual_prefix(pixels), self.prompt_ids(), target_ids)

    def parameter_report(self) -> Dict[str, Tuple[int, int]]:
        """component -> (total, trainable) parameter counts."""
        return {
            name: (self.params.count(prefix), self.params.count(prefix, trainable_only=True))
            for name, prefix in COMPONENT_PREFIXES.items()
        }

    def session(self, image: ImageTensor) -> ImageSession:
        return ImageSession(self, resize(image, self.architecture.image_size))

    def beam_search(self, image: ImageTensor, cfg: Optional[DecodeConfig] = None) -> List[BeamHypothesis]:
        return beam_search(self.session(image), cfg or self.decode, EOS_ID, NEVER_GENERATED)

    def greedy(self, image: ImageTensor, cfg: Optional[DecodeConfig] = None) -> BeamHypothesis:
        return greedy_decode(self.session(image), cfg or self.decode, EOS_ID, NEVER_GENERATED)

    def describe(self, hypothesis: BeamHypothesis) -> str:
        return self.vocab.decode(hypothesis.tokens)

    @weave.op(name="report_generator-generate_report")
    def generate_report(self, image: ImageTensor, greedy: bool = False) -> str:
        if greedy:
            return self.describe(self.greedy(image))
        return self.describe(self.beam_search(image)[0])

    @weave.op(name="report_generator-predict")
    def predict(self, image_path: str) -> str:
        return self.generate_report(load_pgm(image_path))
