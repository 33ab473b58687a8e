from typing import Dict, Literal

from pydantic import BaseModel, ConfigDict, Field

LMMode = Literal["frozen", "ptuning", "full"]


class TrainConfig(BaseModel):
    """Optimization settings; defaults are the desk-scale values."""
    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(default=8, ge=1)
    epochs: int = Field(default=10, ge=1)
    peak_lr: float = Field(default=1e-3, gt=0)
    weight_decay: float = Field(default=0.05, ge=0)
    warmup_steps: int = Field(default=50, ge=0)
    max_report_len: int = Field(default=24, ge=2, description="Target tokens kept per report, EOS included")
    seed: int = Field(default=7, ge=0)
    max_steps: int = Field(default=0, ge=0, description="Stop after this many steps; 0 runs every epoch")
    augment: bool = True
    grad_clip: float = Field(default=1.0, ge=0, description="Global gradient-norm bound; 0 disables clipping")
    pretrain_steps: int = Field(default=400, ge=0, description="Text-only LM steps before the grid rows that start from a pretrained LM")


class AblationSpec(BaseModel):
    """Which components learn during a run."""
    model_config = ConfigDict(extra="forbid")

    vision_trainable: bool = True
    lm_mode: LMMode = "ptuning"
    image_size: int = Field(default=56, ge=1)
    pretrained_lm: bool = Field(default=True, description="Start the LM from the text-only pretraining stage")

    @property
    def qformer_trainable(self) -> bool:
        """The bridge learns in every row."""
        return True

    @property
    def uses_soft_prompts(self) -> bool:
        return self.lm_mode == "ptuning"

    @property
    def vision_label(self) -> str:
        return "vit-desk" + ("†" if self.vision_trainable else "")

    @property
    def language_label(self) -> str:
        if not self.pretrained_lm:
            return "tf-base" + ("†" if self.lm_mode == "full" else "")
        return {"frozen": "lm-desk", "ptuning": "lm-desk*", "full": "lm-desk†"}[self.lm_mode]


# Row ids are stable labels in ablation.tsv; id 2 is not part of the grid.
ABLATION_GRID: Dict[int, AblationSpec] = {
    1: AblationSpec(vision_trainable=False, lm_mode="full", image_size=56, pretrained_lm=False),
    3: AblationSpec(vision_trainable=False, lm_mode="frozen", image_size=56),
    4: AblationSpec(vision_trainable=False, lm_mode="ptuning", image_size=56),
    5: AblationSpec(vision_trainable=True, lm_mode="ptuning", image_size=56),
    6: AblationSpec(vision_trainable=True, lm_mode="ptuning", image_size=84),
}
