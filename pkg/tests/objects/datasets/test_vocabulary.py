import tempfile
import unittest
from pathlib import Path

from objects.datasets.vocabulary import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocabulary, tokenize
from objects.errors import DataError, VocabularyError


class TestVocabulary(unittest.TestCase):
    def setUp(self):
        self.vocab = Vocabulary.build(["CT image showing a dot", "mri image showing a bar"])

    def test_reserved_ids(self):
        self.assertEqual((PAD_ID, BOS_ID, EOS_ID, UNK_ID), (0, 1, 2, 3))
        self.assertEqual(self.vocab.tokens[:4], ["<pad>", "<bos>", "<eos>", "<unk>"])

    def test_sorted_contiguous_ids(self):
        self.assertEqual(self.vocab.tokens[4:], ["a", "bar", "ct", "dot", "image", "mri", "showing"])
        self.assertEqual(len(self.vocab), 11)

    def test_tokenize(self):
        self.assertEqual(tokenize("  CT  Image\tshowing "), ["ct", "image", "showing"])

    def test_encode_decode(self):
        ids = self.vocab.encode("ct image showing a bar", add_eos=True)
        self.assertEqual(ids[-1], EOS_ID)
        self.assertEqual(self.vocab.decode(ids), "ct image showing a bar")
        self.assertEqual(self.vocab.decode([BOS_ID] + ids + [self.vocab.id_of("dot")]), "ct image showing a bar")

    def test_unknown_tokens(self):
        self.assertEqual(self.vocab.encode("pet scan"), [UNK_ID, UNK_ID])
        self.assertEqual(self.vocab.decode([UNK_ID]), "<unk>")

    def test_out_of_range_id(self):
        with self.assertRaises(VocabularyError):
            self.vocab.decode([len(self.vocab)])

    def test_duplicates_rejected(self):
        with self.assertRaises(VocabularyError):
            Vocabulary(["dot", "dot"])

    def test_save_load_keeps_fingerprint(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "vocab.txt"
            self.vocab.save(path)
            loaded = Vocabulary.load(path)
        self.assertEqual(loaded.tokens, self.vocab.tokens)
        self.assertEqual(loaded.fingerprint(), self.vocab.fingerprint())
        self.assertNotEqual(Vocabulary.build(["dot"]).fingerprint(), self.vocab.fingerprint())

    def test_missing_file(self):
        with self.assertRaises(DataError):
            Vocabulary.load("/nonexistent/vocab.txt")


if __name__ == '__main__':
    unittest.main()
