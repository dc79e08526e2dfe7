import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cloudeff import kernels
from cloudeff.dataset import Dataset
from cloudeff.neural import (
    FitnessFunction,
    NetSpec,
    bigru_forward,
    conv1d_forward,
    fitness,
    flatten,
    gru_cell_step,
    gru_forward,
    param_count,
    predict,
    predict_one,
    unflatten,
)

DEFAULT = NetSpec()


def oracle_predict(spec, vec, x):
    """Scalar forward pass that walks the flat vector in the documented order."""
    vec = [float(v) for v in vec]
    pos = 0

    def take(n):
        nonlocal pos
        out = vec[pos:pos + n]
        pos += n
        return out

    p, F, k, H = spec.p, spec.filters, spec.kernel, spec.hidden
    cw = [take(k) for _ in range(F)]
    cb = take(F)

    def read_gru():
        gates = []
        for _ in range(3):
            W = [take(F) for _ in range(H)]
            U = [take(H) for _ in range(H)]
            gates.append((W, U, take(H)))
        return gates

    fwd, bwd = read_gru(), read_gru()
    hw, hb = take(2 * H), take(1)[0]
    assert pos == len(vec)

    if spec.padding == "same":
        left = (k - 1) // 2
        padded = [0.0] * left + list(x) + [0.0] * (k - 1 - left)
    else:
        padded = list(x)
    T = len(padded) - k + 1
    seq = [[math.tanh(cb[f] + sum(cw[f][j] * padded[t + j] for j in range(k))) for f in range(F)] for t in range(T)]

    def sig(a):
        return 1 / (1 + math.exp(-a))

    def run(gates, steps):
        (Wz, Uz, bz), (Wr, Ur, br), (Wn, Un, bn) = gates
        h = [0.0] * H
        for xt in steps:
            def lin(W, U, b, hv):
                return [sum(W[i][j] * xt[j] for j in range(F)) + sum(U[i][j] * hv[j] for j in range(H)) + b[i]
                        for i in range(H)]
            z = [sig(a) for a in lin(Wz, Uz, bz, h)]
            r = [sig(a) for a in lin(Wr, Ur, br, h)]
            n = [math.tanh(a) for a in lin(Wn, Un, bn, [r[i] * h[i] for i in range(H)])]
            h = [(1 - z[i]) * h[i] + z[i] * n[i] for i in range(H)]
        return h

    hidden = run(fwd, seq) + run(bwd, seq[::-1])
    logit = sum(a * b for a, b in zip(hw, hidden)) + hb
    return sig(max(-30.0, min(30.0, logit)))


def identity(a):
    return a


class TestLayout:
    def test_default_count(self):
        assert param_count(DEFAULT) == 213

    def test_minimal_count(self):
        # conv 1+1, each GRU 3 * (1 + 1 + 1), head 2 + 1
        assert param_count(NetSpec(p=5, filters=1, kernel=1, hidden=1)) == 23

    def test_count_independent_of_p(self):
        assert param_count(NetSpec(p=6)) == param_count(NetSpec(p=5)) == 213

    def test_round_trip(self, rng):
        v = rng.normal(size=213)
        assert np.array_equal(flatten(unflatten(DEFAULT, v)), v)

    def test_slicing_order(self):
        v = np.arange(213.0)
        params = unflatten(DEFAULT, v)
        assert params.conv_w[1, 0] == 3.0  # filter-major
        assert params.conv_b.tolist() == [9.0, 10.0, 11.0]
        assert params.forward.Wz[0, 0] == 12.0
        assert params.backward.Wz[0, 0] == 12.0 + 3 * (12 + 16 + 4)
        assert params.head_b == 212.0

    @pytest.mark.parametrize("n", [212, 214])
    def test_wrong_length(self, n):
        with pytest.raises(ValueError):
            unflatten(DEFAULT, np.zeros(n))

    @pytest.mark.parametrize("kwargs", [{"filters": 0}, {"padding": "full"}, {"padding": "valid", "kernel": 6}])
    def test_bad_spec(self, kwargs):
        with pytest.raises(ValueError):
            NetSpec(**kwargs)


class TestConv:
    def test_valid_difference_kernel(self):
        spec = NetSpec(p=4, filters=1, kernel=3, hidden=1, padding="valid")
        params = unflatten(spec, np.r_[1.0, 0.0, -1.0, np.zeros(param_count(spec) - 3)])
        out = conv1d_forward([1, 2, 3, 4], spec, params, activation=identity)
        assert out[:, 0].tolist() == [-2.0, -2.0]

    def test_same_identity_kernel(self):
        spec = NetSpec(p=5, filters=1, kernel=3, hidden=1)
        params = unflatten(spec, np.r_[0.0, 1.0, 0.0, np.zeros(param_count(spec) - 3)])
        x = [0.1, 0.2, 0.3, 0.4, 0.5]
        assert conv1d_forward(x, spec, params, activation=identity)[:, 0].tolist() == x

    def test_same_even_kernel_pads_right(self):
        spec = NetSpec(p=3, filters=1, kernel=2, hidden=1)
        params = unflatten(spec, np.r_[0.0, 1.0, np.zeros(param_count(spec) - 2)])
        # left pad 0, right pad 1: output t reads x[t + 1]
        assert conv1d_forward([1, 2, 3], spec, params, activation=identity)[:, 0].tolist() == [2.0, 3.0, 0.0]

    def test_wrong_length(self, rng):
        with pytest.raises(ValueError):
            conv1d_forward(np.zeros(4), DEFAULT, unflatten(DEFAULT, rng.normal(size=213)))


class TestGRU:
    def test_zero_weights_halve_state(self):
        params = unflatten(DEFAULT, np.zeros(213))
        h = np.array([0.4, -0.2, 0.9, 0.0])
        # z = 0.5, n = tanh(0) = 0
        assert gru_cell_step(np.ones(3), h, params.forward).tolist() == (0.5 * h).tolist()

    def test_zero_state_zero_weights(self):
        params = unflatten(DEFAULT, np.zeros(213))
        assert np.all(gru_forward(np.ones((5, 3)), params.forward) == 0.0)

    @settings(max_examples=50)
    @given(st.integers(0, 2**31), st.floats(0.1, 20))
    def test_state_bounded(self, seed, scale):
        g = np.random.default_rng(seed)
        gru = unflatten(DEFAULT, g.normal(scale=scale, size=213)).forward
        h = gru_forward(g.uniform(-1, 1, size=(8, 3)), gru)
        assert np.all(np.abs(h) <= 1.0)

    def test_shape_errors(self):
        gru = unflatten(DEFAULT, np.zeros(213)).forward
        with pytest.raises(ValueError):
            gru_cell_step(np.zeros(2), np.zeros(4), gru)


class TestBiGRU:
    def test_directions(self, rng):
        params = unflatten(DEFAULT, rng.normal(size=213))
        seq = rng.uniform(-1, 1, size=(5, 3))
        out = bigru_forward(seq, params)
        assert np.array_equal(out[:4], gru_forward(seq, params.forward))
        assert np.array_equal(out[4:], gru_forward(seq[::-1], params.backward))

    def test_swapped_blocks_mirror(self, rng):
        v = rng.normal(size=213)
        params = unflatten(DEFAULT, v)
        swapped = type(params)(params.conv_w, params.conv_b, params.backward, params.forward,
                               params.head_w, params.head_b)
        seq = rng.uniform(-1, 1, size=(5, 3))
        a = bigru_forward(seq, params)
        b = bigru_forward(seq[::-1], swapped)
        assert np.allclose(a[:4], b[4:], atol=1e-15) and np.allclose(a[4:], b[:4], atol=1e-15)

    def test_single_step_directions_share_input(self, rng):
        v = rng.normal(size=213)
        params = unflatten(DEFAULT, v)
        same = type(params)(params.conv_w, params.conv_b, params.forward, params.forward,
                            params.head_w, params.head_b)
        out = bigru_forward(rng.normal(size=(1, 3)), same)
        assert np.array_equal(out[:4], out[4:])

    def test_empty(self):
        with pytest.raises(ValueError):
            bigru_forward(np.zeros((0, 3)), unflatten(DEFAULT, np.zeros(213)))


class TestPredict:
    def test_zero_params(self):
        assert predict(DEFAULT, np.zeros(213), np.full(5, 0.3)) == 0.5
        assert predict_one(DEFAULT, np.zeros(213), np.full(5, 0.3)) == 0.5

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from([0.1, 3.0, 100.0, 1e6]))
    def test_open_interval(self, seed, scale):
        g = np.random.default_rng(seed)
        out = predict(DEFAULT, g.normal(scale=scale, size=213), g.uniform(-2, 3, size=(20, 5)))
        assert np.all(out > 0.0) and np.all(out < 1.0)

    @pytest.mark.parametrize(
        "spec",
        [DEFAULT, NetSpec(p=6), NetSpec(p=5, filters=2, kernel=2, hidden=3),
         NetSpec(p=6, filters=4, kernel=3, hidden=2, padding="valid"), NetSpec(p=5, filters=1, kernel=1, hidden=1)],
    )
    def test_against_oracle(self, spec, backend, rng):
        v = rng.normal(size=param_count(spec))
        X = rng.uniform(-0.2, 1.2, size=(12, spec.p))
        dims = (spec.p, spec.filters, spec.kernel, spec.hidden, spec.padding == "same")
        got = backend.net_predict(np.ascontiguousarray(v), np.ascontiguousarray(X), *dims)
        ref = np.array([oracle_predict(spec, v, x) for x in X])
        assert np.max(np.abs(got - ref)) < 1e-12
        assert np.max(np.abs(np.array([predict_one(spec, v, x) for x in X]) - ref)) < 1e-12

    def test_clip_saturates_identically(self, backend):
        v = np.zeros(213)
        v[-1] = 1e4
        dims = (5, 3, 3, 4, True)
        out = backend.net_predict(v, np.zeros((1, 5)), *dims)[0]
        assert out == 1.0 / (1.0 + math.exp(-30.0))

    def test_deterministic(self, rng):
        v, X = rng.normal(size=213), rng.random((10, 5))
        assert np.array_equal(predict(DEFAULT, v, X), predict(DEFAULT, v, X))

    def test_width_error(self):
        with pytest.raises(ValueError):
            predict(DEFAULT, np.zeros(213), np.zeros((2, 6)))


def _data(X, y):
    X = np.asarray(X, dtype=np.float64)
    names = ("cpu_usage", "memory_usage", "network_traffic", "power_consumption", "execution_time")
    return Dataset(X, np.asarray(y, dtype=np.float64), names)


class TestFitness:
    def test_perfect(self):
        train = _data(np.zeros((3, 5)), [0.5, 0.5, 0.5])
        assert fitness(DEFAULT, np.zeros(213), train) == 0.0

    def test_quarter(self):
        train = _data(np.zeros((2, 5)), [0.0, 1.0])
        assert fitness(DEFAULT, np.zeros(213), train) == 0.25
        assert FitnessFunction(DEFAULT, train)(np.zeros(213)) == 0.25

    def test_matches_predict(self, rng):
        train = _data(rng.random((30, 5)), rng.random(30))
        v = rng.normal(size=213)
        expected = np.mean((predict(DEFAULT, v, train.features) - train.target) ** 2)
        assert fitness(DEFAULT, v, train) == pytest.approx(expected, rel=1e-14)

    def test_feature_mismatch(self):
        with pytest.raises(ValueError):
            FitnessFunction(NetSpec(p=6), _data(np.zeros((2, 5)), [0, 1]))


def test_backend_selected():
    assert kernels.BACKEND in kernels.available_backends()
