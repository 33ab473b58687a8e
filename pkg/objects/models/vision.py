import numpy as np

from objects.autograd import ops
from objects.autograd.tensor import Tensor
from objects.datasets.images import ImageTensor
from objects.errors import PreprocessingError
from objects.models import layers
from objects.models.config import VisionConfig
from objects.models.parameters import ParameterSet

PREFIX = "vision"


def _check_divisible(height: int, width: int, patch_size: int) -> None:
    if height % patch_size or width % patch_size:
        raise PreprocessingError(
            f"image {height}x{width} is not divisible by patch size {patch_size}; resize it first"
        )


def patchify_batch(pixels: Tensor, patch_size: int) -> Tensor:
    """(B, H, W, C) -> (B, P, patch_size²·C), patches in raster order."""
    batch, height, width, channels = pixels.shape
    _check_divisible(height, width, patch_size)
    rows, cols = height // patch_size, width // patch_size
    grid = ops.reshape(pixels, (batch, rows, patch_size, cols, patch_size, channels))
    grid = ops.transpose(grid, (0, 1, 3, 2, 4, 5))
    return ops.reshape(grid, (batch, rows * cols, patch_size * patch_size * channels))


def patchify(img: ImageTensor, cfg: VisionConfig) -> Tensor:
    _check_divisible(img.height, img.width, cfg.patch_size)
    patches = patchify_batch(Tensor(img.pixels[None]), cfg.patch_size)
    return ops.reshape(patches, patches.shape[1:])


def sequence_length(height: int, width: int, cfg: VisionConfig) -> int:
    _check_divisible(height, width, cfg.patch_size)
    return (height // cfg.patch_size) * (width // cfg.patch_size) + int(cfg.use_cls_token)


class VisionEncoder:
    """Pre-norm ViT producing the patch-feature matrix of an image."""

    def __init__(self, config: VisionConfig, image_size: int, channels: int, params: ParameterSet, rng: np.random.Generator):
        self.config = config
        self.image_size = image_size
        self.channels = channels
        self.params = params
        self.num_tokens = sequence_length(image_size, image_size, config)
        patch_dim = config.patch_size * config.patch_size * channels
        layers.init_linear(params, f"{PREFIX}.patch_embed", patch_dim, config.d_v, rng)
        if config.use_cls_token:
            params.normal(f"{PREFIX}.cls_token", (1, config.d_v), rng)
        params.normal(f"{PREFIX}.pos_embed", (self.num_tokens, config.d_v), rng)
        for i in range(config.depth):
            block = f"{PREFIX}.blocks.{i}"
            layers.init_layer_norm(params, f"{block}.ln1", config.d_v)
            layers.init_attention(params, f"{block}.attn", config.d_v, rng)
            layers.init_layer_norm(params, f"{block}.ln2", config.d_v)
            layers.init_mlp(params, f"{block}.mlp", config.d_v, config.mlp_ratio, rng)
        layers.init_layer_norm(params, f"{PREFIX}.ln_post", config.d_v)

    def embed(self, pixels: Tensor) -> Tensor:
        """Token embeddings before the first block: projected patches, CLS, positions."""
        tokens = layers.linear(self.params, f"{PREFIX}.patch_embed", patchify_batch(pixels, self.config.patch_size))
        if self.config.use_cls_token:
            cls = ops.broadcast_leading(self.params[f"{PREFIX}.cls_token"], (pixels.shape[0],))
            tokens = ops.concat([cls, tokens], axis=1)
        if tokens.shape[1] != self.num_tokens:
            raise PreprocessingError(
                f"got {tokens.shape[1]} tokens but the encoder was built for {self.num_tokens}; resize to {self.image_size}"
            )
        return ops.add(tokens, self.params[f"{PREFIX}.pos_embed"])

    def encode(self, pixels: Tensor) -> Tensor:
        hidden = self.embed(pixels)
        for i in range(self.config.depth):
            block = f"{PREFIX}.blocks.{i}"
            hidden = ops.add(hidden, layers.attention(
                self.params, f"{block}.attn", layers.layer_norm(self.params, f"{block}.ln1", hidden), self.config.heads
            ))
            hidden = ops.add(hidden, layers.mlp(
                self.params, f"{block}.mlp", layers.layer_norm(self.params, f"{block}.ln2", hidden)
            ))
        return layers.layer_norm(self.params, f"{PREFIX}.ln_post", hidden)

    def encode_image(self, img: ImageTensor) -> Tensor:
        features = self.encode(Tensor(img.pixels[None].astype(self.params.dtype)))
        return ops.reshape(features, features.shape[1:])

    def set_trainable(self, flag: bool) -> None:
        self.params.set_trainable(f"{PREFIX}.", flag)

    def parameter_count(self) -> int:
        return self.params.count(f"{PREFIX}.")
