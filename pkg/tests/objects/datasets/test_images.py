import numpy as np
import pytest

from objects.datasets.images import (
    ImageTensor,
    augment,
    crop_and_resize,
    hflip,
    load_pgm,
    preprocess,
    resize,
    save_pgm,
)
from objects.errors import PreprocessingError


def gradient_image(size=28):
    return ImageTensor.from_array(np.tile(np.linspace(0.0, 1.0, size, dtype=np.float32), (size, 1)))


def test_from_array_adds_a_channel_and_clips():
    image = ImageTensor.from_array(np.array([[-1.0, 0.5], [2.0, 1.0]]))
    assert image.pixels.shape == (2, 2, 1)
    np.testing.assert_array_equal(image.pixels[:, :, 0], [[0.0, 0.5], [1.0, 1.0]])


def test_rejects_bad_layouts():
    with pytest.raises(PreprocessingError):
        ImageTensor(np.zeros((4, 4, 2), dtype=np.float32))


def test_hflip_mirrors_columns_and_is_an_involution():
    image = gradient_image()
    flipped = hflip(image)
    np.testing.assert_array_equal(flipped.pixels[:, 0], image.pixels[:, -1])
    np.testing.assert_array_equal(hflip(flipped).pixels, image.pixels)


def test_resize():
    image = gradient_image(28)
    assert resize(image, 28) is image
    larger = resize(image, 56)
    assert larger.pixels.shape == (56, 56, 1)
    assert larger.pixels[:, 0].mean() < larger.pixels[:, -1].mean()
    with pytest.raises(PreprocessingError):
        resize(image, 0)


def test_crop_bounds():
    with pytest.raises(PreprocessingError):
        crop_and_resize(gradient_image(), 20, 20, 10, 10, 14)
    assert crop_and_resize(gradient_image(), 0, 0, 14, 14, 28).pixels.shape == (28, 28, 1)


def test_augment_is_seeded():
    image = gradient_image()
    first = augment(image, np.random.default_rng(3), 28)
    second = augment(image, np.random.default_rng(3), 28)
    assert first.pixels.shape == (28, 28, 1)
    assert first.pixels.tobytes() == second.pixels.tobytes()


def test_preprocess_only_augments_in_training():
    image = gradient_image(56)
    np.testing.assert_array_equal(preprocess(image, 28, rng=np.random.default_rng(0)).pixels, resize(image, 28).pixels)
    assert preprocess(image, 28, rng=np.random.default_rng(0), train=True).pixels.shape == (28, 28, 1)


def test_pgm_round_trip_quantizes_to_8_bits(tmp_path):
    image = ImageTensor.from_array(np.random.default_rng(1).random((14, 21)))
    path = tmp_path / "sample.pgm"
    save_pgm(image, path)
    assert path.read_bytes().startswith(b"P5")
    loaded = load_pgm(path)
    assert loaded.pixels.shape == (14, 21, 1)
    assert np.abs(loaded.pixels - image.pixels).max() <= 0.5 / 255 + 1e-6


def test_unreadable_image(tmp_path):
    path = tmp_path / "broken.pgm"
    path.write_bytes(b"not an image")
    with pytest.raises(PreprocessingError):
        load_pgm(path)
