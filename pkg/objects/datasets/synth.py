"""Procedural image/caption corpus standing in for a radiology captioning dataset.

Each sample is a pure function of (seed, index): a noisy background, a
modality cue, one glyph in a 3x3 grid cell and optionally an arrow marker.
Position names are symmetric under horizontal flips, so augmentation never
invalidates a caption.
"""
import hashlib
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from PIL import Image, ImageDraw
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from objects.datasets.images import ImageTensor, save_pgm
from objects.datasets.vocabulary import Vocabulary
from objects.errors import DataError, SpecError
from objects.models.config import DEFAULT_PROMPT

PATCH_MULTIPLE = 14
GLYPHS = ("circle", "cross", "bar", "dot")
MODALITIES = ("ct", "mri", "x-ray")
# Column 1 is the midline; columns 0 and 2 mirror each other under a flip.
POSITION_NAMES: Dict[Tuple[int, int], str] = {
    (0, 0): "upper periphery", (0, 1): "upper midline", (0, 2): "upper periphery",
    (1, 0): "middle periphery", (1, 1): "center", (1, 2): "middle periphery",
    (2, 0): "lower periphery", (2, 1): "lower midline", (2, 2): "lower periphery",
}
CAPTION_TEMPLATE = "{modality} image showing a {glyph} in the {position}"
MARKER_SUFFIX = " marked with white arrow"
LATERALITY_WORDS = frozenset({"left", "right"})
SPLITS = ("train", "val", "test")
NOISE_LEVEL = 0.1


class SynthSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    num_samples: int = Field(default=1000, ge=1)
    image_size: int = Field(default=84, ge=PATCH_MULTIPLE)
    glyphs: Tuple[str, ...] = GLYPHS
    modalities: Tuple[str, ...] = MODALITIES
    marker_probability: float = Field(default=0.5, ge=0, le=1)
    prompt_text: str = DEFAULT_PROMPT
    seed: int = Field(default=7, ge=0)

    @field_validator("glyphs", "modalities", mode="before")
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return tuple(part.strip() for part in value.split(",") if part.strip())
        return value

    @field_validator("glyphs")
    @classmethod
    def _known_glyphs(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = set(value) - set(GLYPHS)
        if unknown or not value:
            raise ValueError(f"glyphs must be a non-empty subset of {GLYPHS}, got {value}")
        return value

    @field_validator("modalities")
    @classmethod
    def _known_modalities(cls, value: Tuple[str, ...]) -> Tuple[str, ...]:
        unknown = set(value) - set(MODALITIES)
        if unknown or not value:
            raise ValueError(f"modalities must be a non-empty subset of {MODALITIES}, got {value}")
        return value

    @classmethod
    def from_text(cls, text: str) -> "SynthSpec":
        values = dotenv_values(stream=io.StringIO(text))
        try:
            return cls.model_validate(values)
        except ValidationError as e:
            raise SpecError(f"invalid synthetic corpus spec: {e}") from e

    @classmethod
    def from_file(cls, path: Union[str, os.PathLike]) -> "SynthSpec":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise SpecError(f"cannot read spec {path}: {e}") from e
        return cls.from_text(text)

    def replace(self, **updates) -> "SynthSpec":
        try:
            return SynthSpec.model_validate({**self.model_dump(), **updates})
        except ValidationError as e:
            raise SpecError(f"invalid synthetic corpus spec: {e}") from e

    def to_text(self) -> str:
        lines = []
        for key, value in sorted(self.model_dump().items()):
            if isinstance(value, tuple):
                value = ",".join(value)
            elif isinstance(value, str):
                value = f"'{value}'"
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SampleLayout:
    modality: str
    glyph: str
    cell: Tuple[int, int]
    marker: bool

    @property
    def position(self) -> str:
        return POSITION_NAMES[self.cell]


@dataclass(frozen=True)
class CorpusRecord:
    index: int
    image_path: str
    caption: str


def caption_for(layout: SampleLayout) -> str:
    caption = CAPTION_TEMPLATE.format(modality=layout.modality, glyph=layout.glyph, position=layout.position)
    return caption + MARKER_SUFFIX if layout.marker else caption


def caption_vocabulary(spec: SynthSpec) -> List[str]:
    """Every caption the spec can produce, enumerated from the template product."""
    captions = set()
    for modality in spec.modalities:
        for glyph in spec.glyphs:
            for cell in POSITION_NAMES:
                for marker in (False, True):
                    captions.add(caption_for(SampleLayout(modality, glyph, cell, marker)))
    return sorted(captions)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def layout_for(spec: SynthSpec, rng: np.random.Generator) -> SampleLayout:
    modality = spec.modalities[int(rng.integers(len(spec.modalities)))]
    glyph = spec.glyphs[int(rng.integers(len(spec.glyphs)))]
    cell = (int(rng.integers(3)), int(rng.integers(3)))
    marker = bool(rng.random() < spec.marker_probability)
    return SampleLayout(modality, glyph, cell, marker)


def _shape_mask(size: int, draw_fn) -> np.ndarray:
    canvas = Image.new("L", (size, size), 0)
    draw_fn(ImageDraw.Draw(canvas))
    return np.asarray(canvas) > 0


def _modality_mask(modality: str, size: int) -> Tuple[np.ndarray, float]:
    inset = max(1, size // 16)
    if modality == "ct":
        mask = _shape_mask(size, lambda d: d.ellipse([inset, inset, size - 1 - inset, size - 1 - inset], outline=255, width=max(1, size // 28)))
        return mask, 0.55
    if modality == "mri":
        mask = _shape_mask(size, lambda d: d.ellipse([inset, inset, size - 1 - inset, size - 1 - inset], fill=255))
        return mask, 0.25
    band = max(1, size // 14)

    def ribs(d: ImageDraw.ImageDraw) -> None:
        for top in range(inset, size - inset, 3 * band):
            d.rectangle([inset, top, size - 1 - inset, top + band - 1], fill=255)

    return _shape_mask(size, ribs), 0.35


def _glyph_mask(glyph: str, cx: float, cy: float, radius: float, size: int) -> np.ndarray:
    box = [cx - radius, cy - radius, cx + radius, cy + radius]
    thick = max(1.0, radius / 3)
    if glyph == "circle":
        return _shape_mask(size, lambda d: d.ellipse(box, fill=255))
    if glyph == "dot":
        small = radius / 2.5
        return _shape_mask(size, lambda d: d.ellipse([cx - small, cy - small, cx + small, cy + small], fill=255))
    if glyph == "bar":
        return _shape_mask(size, lambda d: d.rectangle([cx - radius, cy - thick, cx + radius, cy + thick], fill=255))

    def cross(d: ImageDraw.ImageDraw) -> None:
        d.rectangle([cx - radius, cy - thick / 2, cx + radius, cy + thick / 2], fill=255)
        d.rectangle([cx - thick / 2, cy - radius, cx + thick / 2, cy + radius], fill=255)

    return _shape_mask(size, cross)


def _arrow_mask(cx: float, cy: float, radius: float, size: int) -> np.ndarray:
    """Vertical arrow pointing down at the glyph from above (or up from below near the top edge)."""
    gap, length = radius * 1.3, radius * 1.6
    direction = 1 if cy - gap - length >= 0 else -1
    tip = cy - direction * gap
    tail = tip - direction * length
    head = radius * 0.6

    def arrow(d: ImageDraw.ImageDraw) -> None:
        d.line([cx, tail, cx, tip], fill=255, width=max(1, int(radius / 3)))
        d.polygon([(cx - head, tip - direction * head), (cx + head, tip - direction * head), (cx, tip)], fill=255)

    return _shape_mask(size, arrow)


def render_sample(spec: SynthSpec, index: int) -> Tuple[ImageTensor, str]:
    if spec.image_size % PATCH_MULTIPLE:
        raise SpecError(f"image_size={spec.image_size} is not divisible by {PATCH_MULTIPLE}")
    rng = sample_rng(spec.seed, index)
    layout = layout_for(spec, rng)
    size = spec.image_size
    pixels = rng.uniform(0.0, NOISE_LEVEL, size=(size, size))
    frame, level = _modality_mask(layout.modality, size)
    pixels[frame] = level + rng.uniform(0.0, NOISE_LEVEL, size=int(frame.sum()))
    cell = size / 3
    jitter = cell / 8
    row, col = layout.cell
    cx = (col + 0.5) * cell + (rng.uniform(-jitter, jitter) if col != 1 else 0.0)
    cy = (row + 0.5) * cell + rng.uniform(-jitter, jitter)
    radius = cell * rng.uniform(0.24, 0.3)
    pixels[_glyph_mask(layout.glyph, cx, cy, radius, size)] = rng.uniform(0.85, 0.95)
    if layout.marker:
        pixels[_arrow_mask(cx, cy, radius, size)] = 1.0
    return ImageTensor.from_array(pixels), caption_for(layout)


def split_of(seed: int, index: int) -> str:
    """80/10/10 train/val/test by a hash of (seed, index)."""
    bucket = int.from_bytes(hashlib.sha256(f"{seed}:{index}".encode("utf-8")).digest()[:8], "little") % 10
    return "train" if bucket < 8 else ("val" if bucket == 8 else "test")


def _write_manifest(path: Path, records: List[CorpusRecord]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(f"{record.index}\t{record.image_path}\t{record.caption}\n")


def generate_corpus(spec: SynthSpec, out_dir: Union[str, os.PathLike], workers: int = 1) -> Dict[str, object]:
    """Render every sample and write images, manifests, vocabulary and the spec itself."""
    if spec.image_size % PATCH_MULTIPLE:
        raise SpecError(f"image_size={spec.image_size} is not divisible by {PATCH_MULTIPLE}")
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)

    def _render(index: int) -> CorpusRecord:
        image, caption = render_sample(spec, index)
        relative = f"images/{index:05d}.pgm"
        save_pgm(image, out / relative)
        return CorpusRecord(index, relative, caption)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        records = list(pool.map(_render, range(spec.num_samples)))

    _write_manifest(out / "manifest.tsv", records)
    counts = {}
    for split in SPLITS:
        subset = [r for r in records if split_of(spec.seed, r.index) == split]
        _write_manifest(out / f"{split}.tsv", subset)
        counts[split] = len(subset)
    vocab = Vocabulary.build([r.caption for r in records] + [spec.prompt_text])
    vocab.save(out / "vocab.txt")
    (out / "synth_spec.txt").write_text(spec.to_text(), encoding="utf-8")
    return {"out_dir": str(out), "samples": len(records), "splits": counts, "vocab_size": len(vocab)}


def load_manifest(data_dir: Union[str, os.PathLike], split: str = "manifest") -> List[CorpusRecord]:
    path = Path(data_dir) / f"{split}.tsv"
    if not path.exists():
        raise DataError(f"missing manifest {path}; run gen-data first")
    records = []
    with open(path, encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{number}: expected index<TAB>image_path<TAB>caption")
            records.append(CorpusRecord(int(parts[0]), parts[1], parts[2]))
    return records
