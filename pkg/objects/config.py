"""Flat key=value run configuration covering every component.

Keys are `<section>.<field>`; unknown sections and fields are rejected. The
text form is canonical (sorted, one key per line) so it round-trips byte for byte.
"""
import io
import os
from pathlib import Path
from typing import Any, Dict, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from objects.decoding.beam import DecodeConfig
from objects.errors import ConfigError
from objects.models.config import LMConfig, ModelConfig, QFormerConfig, VisionConfig
from objects.training.config import AblationSpec, TrainConfig


class ModelSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    channels: int = Field(default=1)
    dtype: str = Field(default="float32", pattern="^float(32|64)$")


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    eval_limit: int = Field(default=0, ge=0, description="Decode at most this many samples per split when scoring; 0 means all")
    vocab_hash: str = Field(default="", description="SHA-256 of the vocabulary the run was trained on; empty skips the check")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vision: VisionConfig = Field(default_factory=VisionConfig)
    qformer: QFormerConfig = Field(default_factory=QFormerConfig)
    lm: LMConfig = Field(default_factory=LMConfig)
    model: ModelSettings = Field(default_factory=ModelSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)
    decode: DecodeConfig = Field(default_factory=DecodeConfig)
    ablation: AblationSpec = Field(default_factory=AblationSpec)
    data: DataConfig = Field(default_factory=DataConfig)

    @classmethod
    def sections(cls) -> Dict[str, type]:
        return {name: info.annotation for name, info in cls.model_fields.items()}

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        nested: Dict[str, Dict[str, Any]] = {}
        sections = cls.sections()
        for key, value in dotenv_values(stream=io.StringIO(text)).items():
            section, _, name = key.partition(".")
            if section not in sections or not name:
                raise ConfigError(f"unknown config key '{key}'; expected <section>.<field> with section in {sorted(sections)}")
            if value is None:
                raise ConfigError(f"config key '{key}' has no value")
            nested.setdefault(section, {})[name] = value
        try:
            return cls.model_validate(nested)
        except ValidationError as e:
            raise ConfigError(f"invalid run config: {e}") from e

    @classmethod
    def from_file(cls, path: Union[str, os.PathLike]) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_text(text)

    def to_text(self) -> str:
        lines = []
        for section in self.sections():
            for name, value in getattr(self, section).model_dump().items():
                if isinstance(value, bool):
                    value = "true" if value else "false"
                elif isinstance(value, str):
                    value = f"'{value}'"
                lines.append(f"{section}.{name}={value}")
        return "\n".join(sorted(lines)) + "\n"

    def with_overrides(self, **sections: Dict[str, Any]) -> "RunConfig":
        """Copy with some fields replaced, e.g. `with_overrides(train={"seed": 3})`."""
        data = self.model_dump()
        for section, values in sections.items():
            data[section].update(values)
        try:
            return RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError(f"invalid run config: {e}") from e

    def build_model_config(self) -> ModelConfig:
        """The network for this run's ablation row: its image size, and soft prompts only under P-tuning."""
        soft = self.lm.soft_prompt_len if self.ablation.uses_soft_prompts else 0
        try:
            return ModelConfig(
                vision=self.vision,
                qformer=self.qformer.model_copy(update={"d_lm": self.lm.d_model}),
                lm=self.lm.model_copy(update={"soft_prompt_len": soft}),
                image_size=self.ablation.image_size,
                channels=self.model.channels,
                dtype=self.model.dtype,
            )
        except ValidationError as e:
            raise ConfigError(f"inconsistent model configuration: {e}") from e
