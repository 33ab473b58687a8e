import unittest

import numpy as np

from objects.errors import NumericError
from objects.models.parameters import ParameterSet
from objects.training.optimizer import AdamW, AdamWState, adamw_step, clip_gradients, decays


class TestAdamW(unittest.TestCase):
    def setUp(self):
        self.params = ParameterSet("float64")
        self.params.ones("lm.head.weight", (2,))
        self.params.ones("lm.head.bias", (2,))
        self.params.ones("vision.patch_embed.weight", (2,))

    def test_zero_gradient_is_a_fixed_point(self):
        state = AdamWState()
        adamw_step(dict(self.params.items()), {"lm.head.weight": np.zeros(2)}, state, lr=0.1, weight_decay=0.0)
        np.testing.assert_array_equal(self.params["lm.head.weight"].data, [1.0, 1.0])
        self.assertEqual(state.step, 1)

    def test_first_step_moves_by_lr(self):
        """Test the closed-form first Adam step: w=1, g=1, lr=0.1 lands at 0.9."""
        adamw_step(dict(self.params.items()), {"lm.head.weight": np.ones(2)}, AdamWState(), lr=0.1, weight_decay=0.0)
        np.testing.assert_allclose(self.params["lm.head.weight"].data, [0.9, 0.9], atol=1e-7)

    def test_decay_is_decoupled_and_skips_biases(self):
        """Test weight decay applies to weights only and outside the Adam moments."""
        grads = {"lm.head.weight": np.zeros(2), "lm.head.bias": np.zeros(2)}
        adamw_step(dict(self.params.items()), grads, AdamWState(), lr=0.1, weight_decay=0.5)
        np.testing.assert_allclose(self.params["lm.head.weight"].data, [0.95, 0.95])
        np.testing.assert_array_equal(self.params["lm.head.bias"].data, [1.0, 1.0])
        self.assertTrue(decays("qformer.blocks.1.ffn.in.weight"))
        self.assertFalse(decays("lm.blocks.1.ln1.gain"))

    def test_frozen_tensors_do_not_move(self):
        self.params.set_trainable("vision.", False)
        optimizer = AdamW(self.params, weight_decay=0.05)
        for _, tensor in self.params.items():
            tensor.grad = np.ones(2)
        optimizer.step(0.1)
        np.testing.assert_array_equal(self.params["vision.patch_embed.weight"].data, [1.0, 1.0])
        self.assertLess(self.params["lm.head.weight"].data[0], 1.0)
        self.assertNotIn("vision.patch_embed.weight", optimizer.state.m)

    def test_non_finite_gradient(self):
        """Test that a NaN gradient raises NumericError."""
        with self.assertRaises(NumericError):
            adamw_step(dict(self.params.items()), {"lm.head.weight": np.array([np.nan, 0.0])}, AdamWState(), 0.1, 0.0)

    def test_clip_gradients(self):
        grads = {"a": np.array([3.0]), "b": np.array([4.0])}
        self.assertAlmostEqual(clip_gradients(grads, 1.0), 5.0)
        self.assertAlmostEqual(float(np.sqrt(grads["a"] ** 2 + grads["b"] ** 2)[0]), 1.0)
        untouched = {"a": np.array([0.3])}
        clip_gradients(untouched, 1.0)
        np.testing.assert_array_equal(untouched["a"], [0.3])

    def test_state_records_round_trip(self):
        state = AdamWState(step=3, m={"lm.head.weight": np.ones(2)}, v={"lm.head.weight": np.full(2, 2.0)})
        restored = AdamWState.from_records(state.to_records())
        self.assertEqual(restored.step, 3)
        np.testing.assert_array_equal(restored.v["lm.head.weight"], [2.0, 2.0])


if __name__ == '__main__':
    unittest.main()
