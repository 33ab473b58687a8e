"""Image container, PGM I/O and the train/inference preprocessing paths."""
import os
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from PIL import Image

from objects.errors import PreprocessingError

CROP_SCALE: Tuple[float, float] = (0.8, 1.0)
FLIP_PROBABILITY = 0.5


@dataclass(frozen=True)
class ImageTensor:
    """Pixels in [0, 1], stored as (height, width, channels)."""
    pixels: np.ndarray

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] not in (1, 3):
            raise PreprocessingError(f"expected (H, W, 1|3) pixels, got shape {self.pixels.shape}")

    @classmethod
    def from_array(cls, array: np.ndarray) -> "ImageTensor":
        array = np.asarray(array, dtype=np.float32)
        if array.ndim == 2:
            array = array[:, :, None]
        return cls(np.clip(array, 0.0, 1.0))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def load_pgm(path: Union[str, os.PathLike]) -> ImageTensor:
    try:
        with Image.open(path) as handle:
            gray = np.asarray(handle.convert("L"), dtype=np.float32)
    except (OSError, ValueError) as e:
        raise PreprocessingError(f"cannot read image {path}: {e}") from e
    return ImageTensor.from_array(gray / 255.0)


def save_pgm(image: ImageTensor, path: Union[str, os.PathLike]) -> None:
    """Binary P5 graymap, maxval 255. Colour images are averaged to gray."""
    gray = image.pixels.mean(axis=2)
    quantized = np.clip(np.rint(gray * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(quantized).save(path, format="PPM")


def resize(image: ImageTensor, size: int) -> ImageTensor:
    """Bilinear resize to size×size; the inference path."""
    if size < 1:
        raise PreprocessingError(f"target size must be positive, got {size}")
    if image.height == size and image.width == size:
        return image
    planes = []
    for c in range(image.channels):
        plane = Image.fromarray(np.ascontiguousarray(image.pixels[:, :, c], dtype=np.float32))
        planes.append(np.asarray(plane.resize((size, size), Image.Resampling.BILINEAR), dtype=np.float32))
    return ImageTensor.from_array(np.stack(planes, axis=2))


def crop_and_resize(image: ImageTensor, top: int, left: int, height: int, width: int, size: int) -> ImageTensor:
    if not (0 <= top and 0 <= left and height >= 1 and width >= 1
            and top + height <= image.height and left + width <= image.width):
        raise PreprocessingError(
            f"crop ({top}, {left}, {height}, {width}) falls outside a {image.height}x{image.width} image"
        )
    window = image.pixels[top:top + height, left:left + width]
    return resize(ImageTensor(np.ascontiguousarray(window)), size)


def hflip(image: ImageTensor) -> ImageTensor:
    return ImageTensor(np.ascontiguousarray(image.pixels[:, ::-1]))


def random_resized_crop(image: ImageTensor, rng: np.random.Generator, size: int,
                        scale: Tuple[float, float] = CROP_SCALE) -> ImageTensor:
    """Crop a window covering a uniform fraction of the area (aspect kept), then resize."""
    fraction = rng.uniform(*scale)
    side = np.sqrt(fraction)
    height = max(1, min(image.height, int(round(image.height * side))))
    width = max(1, min(image.width, int(round(image.width * side))))
    top = int(rng.integers(0, image.height - height + 1))
    left = int(rng.integers(0, image.width - width + 1))
    return crop_and_resize(image, top, left, height, width, size)


def augment(image: ImageTensor, rng: np.random.Generator, size: int,
            flip_probability: float = FLIP_PROBABILITY) -> ImageTensor:
    """Training-time augmentation: random resized crop, then a horizontal flip with probability 0.5."""
    cropped = random_resized_crop(image, rng, size)
    if rng.random() < flip_probability:
        cropped = hflip(cropped)
    return cropped


def preprocess(image: ImageTensor, size: int, rng: np.random.Generator = None, train: bool = False) -> ImageTensor:
    if train and rng is not None:
        return augment(image, rng, size)
    return resize(image, size)
