import re
import unittest

import numpy as np
import pytest

from objects.datasets.synth import (
    LATERALITY_WORDS,
    SynthSpec,
    caption_vocabulary,
    generate_corpus,
    load_manifest,
    render_sample,
    split_of,
)
from objects.datasets.vocabulary import Vocabulary, tokenize
from objects.errors import DataError, SpecError

CAPTION = re.compile(
    r"^(ct|mri|x-ray) image showing a (circle|cross|bar|dot) in the "
    r"(upper|middle|lower) (periphery|midline)( marked with white arrow)?$"
    r"|^(ct|mri|x-ray) image showing a (circle|cross|bar|dot) in the center( marked with white arrow)?$"
)


class TestRenderSample(unittest.TestCase):
    def setUp(self):
        self.spec = SynthSpec(num_samples=50, image_size=28, seed=5)

    def test_same_seed_and_index_render_identically(self):
        first_image, first_caption = render_sample(self.spec, 12)
        second_image, second_caption = render_sample(self.spec, 12)
        self.assertEqual(first_caption, second_caption)
        self.assertEqual(first_image.pixels.tobytes(), second_image.pixels.tobytes())

    def test_other_index_differs(self):
        self.assertNotEqual(render_sample(self.spec, 1)[0].pixels.tobytes(),
                            render_sample(self.spec, 2)[0].pixels.tobytes())

    def test_captions_follow_the_template(self):
        for index in range(50):
            image, caption = render_sample(self.spec, index)
            self.assertRegex(caption, CAPTION)
            self.assertEqual(image.pixels.shape, (28, 28, 1))
            self.assertTrue(0.0 <= image.pixels.min() and image.pixels.max() <= 1.0)

    def test_no_laterality_words(self):
        for caption in caption_vocabulary(SynthSpec()):
            self.assertFalse(set(tokenize(caption)) & LATERALITY_WORDS)

    def test_vocabulary_stays_small(self):
        vocab = Vocabulary.build(caption_vocabulary(SynthSpec()) + [SynthSpec().prompt_text])
        self.assertLess(len(vocab), 200)

    def test_image_size_must_be_patch_aligned(self):
        with self.assertRaises(SpecError):
            render_sample(SynthSpec(image_size=30), 0)


class TestSynthSpec(unittest.TestCase):
    def test_text_round_trip(self):
        spec = SynthSpec(num_samples=12, glyphs=("dot", "bar"), seed=4)
        self.assertEqual(SynthSpec.from_text(spec.to_text()), spec)

    def test_comma_separated_lists(self):
        spec = SynthSpec.from_text("glyphs=circle,dot\nmodalities=ct\n")
        self.assertEqual(spec.glyphs, ("circle", "dot"))
        self.assertEqual(spec.modalities, ("ct",))

    def test_invalid_specs(self):
        for text in ("num_samples=0\n", "glyphs=triangle\n", "marker_probability=2\n", "colour=red\n"):
            with self.assertRaises(SpecError):
                SynthSpec.from_text(text)

    def test_replace_validates(self):
        with self.assertRaises(SpecError):
            SynthSpec().replace(num_samples=-1)


def test_split_assignment_is_stable():
    splits = [split_of(7, index) for index in range(2000)]
    assert splits == [split_of(7, index) for index in range(2000)]
    share = np.mean([s == "train" for s in splits])
    assert 0.75 < share < 0.85
    assert {"val", "test"} <= set(splits)


def test_generate_corpus_layout(toy_corpus):
    manifest = load_manifest(toy_corpus)
    assert len(manifest) == 30
    split_indices = sorted(r.index for split in ("train", "val", "test") for r in load_manifest(toy_corpus, split))
    assert split_indices == list(range(30))
    assert (toy_corpus / manifest[0].image_path).exists()
    vocab = Vocabulary.load(toy_corpus / "vocab.txt")
    assert all(token in vocab for record in manifest for token in tokenize(record.caption))
    assert SynthSpec.from_file(toy_corpus / "synth_spec.txt").num_samples == 30


def test_generation_is_reproducible(tmp_path):
    spec = SynthSpec(num_samples=6, image_size=28, seed=9)
    first = generate_corpus(spec, tmp_path / "a", workers=3)
    second = generate_corpus(spec, tmp_path / "b")
    assert first["splits"] == second["splits"]
    assert (tmp_path / "a" / "manifest.tsv").read_text() == (tmp_path / "b" / "manifest.tsv").read_text()
    assert (tmp_path / "a" / "images" / "00003.pgm").read_bytes() == (tmp_path / "b" / "images" / "00003.pgm").read_bytes()


def test_missing_or_malformed_manifest(tmp_path):
    with pytest.raises(DataError):
        load_manifest(tmp_path, "train")
    (tmp_path / "train.tsv").write_text("0\timages/00000.pgm\n")
    with pytest.raises(DataError):
        load_manifest(tmp_path, "train")


if __name__ == '__main__':
    unittest.main()
