import unittest

import numpy as np

from objects.errors import DimensionError
from objects.models.parameters import ParameterSet


class TestParameterSet(unittest.TestCase):
    def setUp(self):
        self.params = ParameterSet("float64")
        rng = np.random.default_rng(0)
        self.params.normal("vision.w", (3, 4), rng)
        self.params.zeros("lm.bias", (4,))
        self.params.ones("lm.gain", (4,))

    def test_count_and_trainability(self):
        self.assertEqual(self.params.count(), 20)
        self.params.set_trainable("lm.", False)
        self.assertEqual(self.params.count(trainable_only=True), 12)
        self.assertFalse(self.params["lm.gain"].requires_grad)
        self.assertEqual([name for name, _ in self.params.trainable_items()], ["vision.w"])

    def test_duplicate_name(self):
        with self.assertRaises(KeyError):
            self.params.zeros("lm.bias", (4,))

    def test_state_round_trip(self):
        other = ParameterSet("float64")
        other.zeros("vision.w", (3, 4))
        other.zeros("lm.bias", (4,))
        other.zeros("lm.gain", (4,))
        other.load_state_dict(self.params.state_dict())
        self.assertEqual(other.snapshot(), self.params.snapshot())

    def test_strict_load_rejects_missing_names(self):
        with self.assertRaises(KeyError):
            self.params.load_state_dict({"vision.w": np.zeros((3, 4))})

    def test_partial_load(self):
        self.params.load_state_dict({"lm.bias": np.full(4, 2.0, dtype=np.float32)}, strict=False)
        np.testing.assert_array_equal(self.params["lm.bias"].data, [2.0] * 4)
        self.assertEqual(self.params["lm.bias"].dtype, np.float64)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            self.params.load_state_dict({"lm.bias": np.zeros(5)}, strict=False)


if __name__ == '__main__':
    unittest.main()
