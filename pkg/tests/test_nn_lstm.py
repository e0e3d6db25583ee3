"""LSTM step, sequence forward, and BPTT gradients."""

import numpy as np
import pytest

from flowsentinel.errors import EmptySequenceError, MissingCacheError, ShapeMismatchError
from flowsentinel.nn import LSTM, precision
from flowsentinel.rng import Rng

from conftest import central_difference, max_rel_err, reference_lstm_step


def make_lstm(d, h, return_sequences=True, seed=0):
    with precision(np.float64):
        return LSTM(d, h, Rng(seed), return_sequences=return_sequences)


class TestStep:
    def test_all_zero_parameters(self):
        lstm = make_lstm(2, 3)
        lstm.weight.value[...] = 0.0
        lstm.bias.value[...] = 0.0
        h, c, (z_in, i, f, g, o, c_prev, tc) = lstm.step(
            np.ones((1, 2)), np.zeros((1, 3)), np.zeros((1, 3))
        )
        assert np.allclose(i, 0.5) and np.allclose(f, 0.5) and np.allclose(o, 0.5)
        assert np.allclose(g, 0.0)
        assert np.allclose(c, 0.0)
        assert np.allclose(h, 0.0)

    def test_zero_weights_carry_cell(self):
        lstm = make_lstm(2, 3)
        lstm.weight.value[...] = 0.0
        lstm.bias.value[...] = 0.0
        c_prev = np.array([[0.4, -1.2, 2.0]])
        h, c, _ = lstm.step(np.ones((1, 2)), np.zeros((1, 3)), c_prev)
        assert np.allclose(c, 0.5 * c_prev)
        assert np.allclose(h, 0.5 * np.tanh(0.5 * c_prev))

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_reference_step(self, seed, np_rng):
        d, h = 3, 4
        lstm = make_lstm(d, h, seed=seed)
        x = np_rng.normal(size=d)
        h_prev = np_rng.normal(size=h)
        c_prev = np_rng.normal(size=h)
        got_h, got_c, _ = lstm.step(x[None, :], h_prev[None, :], c_prev[None, :])
        ref_h, ref_c = reference_lstm_step(x, h_prev, c_prev, lstm.weight.value, lstm.bias.value)
        assert np.allclose(got_h[0], ref_h, atol=1e-6)
        assert np.allclose(got_c[0], ref_c, atol=1e-6)

    def test_hidden_state_bounded(self, np_rng):
        lstm = make_lstm(2, 8)
        h, _, _ = lstm.step(np_rng.normal(size=(4, 2)) * 10, np.zeros((4, 8)), np.zeros((4, 8)))
        assert np.all(np.abs(h) <= 1.0)

    def test_shape_mismatch(self):
        lstm = make_lstm(2, 3)
        with pytest.raises(ShapeMismatchError):
            lstm.step(np.ones((1, 5)), np.zeros((1, 3)), np.zeros((1, 3)))


class TestForward:
    def test_single_step_equals_step(self, np_rng):
        lstm = make_lstm(2, 4, return_sequences=False)
        x = np_rng.normal(size=(3, 1, 2))
        out = lstm.forward(x)
        h, _, _ = lstm.step(x[:, 0, :], np.zeros((3, 4)), np.zeros((3, 4)))
        assert np.allclose(out, h)

    def test_zero_weights_zero_output(self, np_rng):
        lstm = make_lstm(2, 4)
        lstm.weight.value[...] = 0.0
        lstm.bias.value[...] = 0.0
        out = lstm.forward(np_rng.normal(size=(2, 6, 2)))
        assert np.allclose(out, 0.0)

    def test_three_steps_match_unrolled_reference(self, np_rng):
        lstm = make_lstm(2, 3, return_sequences=True)
        x = np_rng.normal(size=(5, 2))  # single sample, T=5 needs squeeze path too
        out = lstm.forward(x[:3])
        h = np.zeros(3)
        c = np.zeros(3)
        for t in range(3):
            h, c = reference_lstm_step(x[t], h, c, lstm.weight.value, lstm.bias.value)
            assert np.allclose(out[t], h, atol=1e-9)

    def test_return_last_only(self, np_rng):
        seq = make_lstm(2, 3, return_sequences=True, seed=4)
        last = make_lstm(2, 3, return_sequences=False, seed=4)
        x = np_rng.normal(size=(2, 7, 2))
        assert np.allclose(seq.forward(x)[:, -1, :], last.forward(x))

    def test_empty_sequence_rejected(self):
        lstm = make_lstm(2, 3)
        with pytest.raises(EmptySequenceError):
            lstm.forward(np.zeros((1, 0, 2)))


class TestBackward:
    def test_zero_grad_out_gives_zero(self, np_rng):
        lstm = make_lstm(2, 3, return_sequences=True)
        x = np_rng.normal(size=(2, 4, 2))
        out = lstm.forward(x)
        grad_x = lstm.backward(np.zeros_like(out))
        assert np.allclose(grad_x, 0)
        assert np.allclose(lstm.weight.grad, 0)

    def test_backward_requires_cache(self):
        lstm = make_lstm(2, 3)
        with pytest.raises(MissingCacheError):
            lstm.backward(np.zeros((1, 4, 3)))

    @pytest.mark.parametrize("t_steps,return_sequences", [(1, False), (1, True), (4, True), (4, False)])
    def test_matches_finite_differences(self, t_steps, return_sequences):
        rng = np.random.default_rng(31 + t_steps)
        d, h = 2, 3
        lstm = make_lstm(d, h, return_sequences=return_sequences, seed=t_steps)
        x = rng.normal(size=(2, t_steps, d))

        def loss():
            return float(lstm.forward(x).sum())

        lstm.weight.zero_grad()
        lstm.bias.zero_grad()
        out = lstm.forward(x)
        grad_x = lstm.backward(np.ones_like(out))
        assert max_rel_err(grad_x, central_difference(loss, x)) < 1e-4
        assert max_rel_err(lstm.weight.grad, central_difference(loss, lstm.weight.value)) < 1e-4
        assert max_rel_err(lstm.bias.grad, central_difference(loss, lstm.bias.value)) < 1e-4

    def test_stacked_lstms_match_finite_differences(self):
        # Two layers chained, mirroring the model topology.
        rng = np.random.default_rng(77)
        first = make_lstm(2, 3, return_sequences=True, seed=11)
        second = make_lstm(3, 3, return_sequences=False, seed=12)
        x = rng.normal(size=(2, 4, 2))

        def loss():
            return float(second.forward(first.forward(x)).sum())

        for p in first.parameters() + second.parameters():
            p.zero_grad()
        out = second.forward(first.forward(x))
        grad_mid = second.backward(np.ones_like(out))
        grad_x = first.backward(grad_mid)
        assert max_rel_err(grad_x, central_difference(loss, x)) < 1e-4
        for p in first.parameters() + second.parameters():
            assert max_rel_err(p.grad, central_difference(loss, p.value)) < 1e-4, p.name
