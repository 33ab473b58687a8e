from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

DEFAULT_PROMPT = "Question: What is the radiology report for this image? Answer:"


class VisionConfig(BaseModel):
    """Patch encoder hyper-parameters (desk scale by default)."""
    model_config = ConfigDict(extra="forbid")

    patch_size: int = Field(default=14, ge=1, description="Square patch side in pixels")
    d_v: int = Field(default=64, ge=1, description="Embedding width")
    depth: int = Field(default=2, ge=0, description="Number of Transformer blocks")
    heads: int = Field(default=4, ge=1)
    use_cls_token: bool = True
    mlp_ratio: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "VisionConfig":
        if self.d_v % self.heads:
            raise ValueError(f"vision d_v={self.d_v} is not divisible by heads={self.heads}")
        return self


class QFormerConfig(BaseModel):
    """Query Transformer hyper-parameters."""
    model_config = ConfigDict(extra="forbid")

    num_queries: int = Field(default=8, ge=1, description="K, the number of learnable query tokens")
    d_q: int = Field(default=64, ge=1)
    depth: int = Field(default=2, ge=1)
    heads: int = Field(default=4, ge=1)
    cross_attn_period: int = Field(default=2, ge=1, description="Cross-attention in every block whose 1-based index is a multiple of this")
    d_lm: int = Field(default=128, ge=1, description="Width of the language model the output is projected to")
    mlp_ratio: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "QFormerConfig":
        if self.d_q % self.heads:
            raise ValueError(f"qformer d_q={self.d_q} is not divisible by heads={self.heads}")
        return self


class LMConfig(BaseModel):
    """Decoder-only language model hyper-parameters."""
    model_config = ConfigDict(extra="forbid")

    d_model: int = Field(default=128, ge=1)
    depth: int = Field(default=4, ge=1)
    heads: int = Field(default=4, ge=1)
    vocab_size: int = Field(default=0, ge=0, description="0 means: take it from the corpus vocabulary")
    max_positions: int = Field(default=128, ge=1)
    prompt_text: str = DEFAULT_PROMPT
    soft_prompt_len: int = Field(default=4, ge=0, description="P-tuning prompt length per layer; 0 disables P-tuning")
    attention_mask: Literal["causal", "prefix"] = "causal"
    mlp_ratio: int = Field(default=4, ge=1)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "LMConfig":
        if self.d_model % self.heads:
            raise ValueError(f"lm d_model={self.d_model} is not divisible by heads={self.heads}")
        return self

    @property
    def head_dim(self) -> int:
        return self.d_model // self.heads


class ModelConfig(BaseModel):
    """Everything needed to instantiate the full captioning network."""
    model_config = ConfigDict(extra="forbid")

    vision: VisionConfig = Field(default_factory=VisionConfig)
    qformer: QFormerConfig = Field(default_factory=QFormerConfig)
    lm: LMConfig = Field(default_factory=LMConfig)
    image_size: int = Field(default=56, ge=1)
    channels: int = Field(default=1, description="1 (grayscale) or 3")
    dtype: Literal["float32", "float64"] = "float32"

    @model_validator(mode="after")
    def _components_agree(self) -> "ModelConfig":
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.image_size % self.vision.patch_size:
            raise ValueError(f"image_size={self.image_size} is not divisible by patch_size={self.vision.patch_size}")
        if self.qformer.d_lm != self.lm.d_model:
            raise ValueError(f"qformer.d_lm={self.qformer.d_lm} must equal lm.d_model={self.lm.d_model}")
        if self.qformer.num_queries >= self.num_image_tokens:
            raise ValueError(
                f"qformer.num_queries={self.qformer.num_queries} must be below the image token count {self.num_image_tokens}"
            )
        return self

    @property
    def num_image_tokens(self) -> int:
        grid = self.image_size // self.vision.patch_size
        return grid * grid + int(self.vision.use_cls_token)
