"""CNN-BiGRU regressor over a scaled feature row treated as a 1-channel sequence.

The network is a 1-D convolution (``filters`` kernels of width ``kernel``,
tanh), a bidirectional GRU with ``hidden`` units per direction whose final
states are concatenated, and a sigmoid output unit. All weights live in one
flat vector so a derivative-free optimizer can search over them.

Flat layout, in order:

* conv weights, filter-major (``filters x kernel``), then conv biases
* forward GRU: gates z, r, n; each as W (hidden x filters), U (hidden x hidden), b
* backward GRU, same layout
* head weights (forward half, then backward half), then head bias

The single-sample functions below are the readable reference; batch
prediction and fitness dispatch to :mod:`cloudeff.kernels`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class NetSpec:
    p: int = 5
    filters: int = 3
    kernel: int = 3
    hidden: int = 4
    padding: str = "same"

    def __post_init__(self):
        for name in ("p", "filters", "kernel", "hidden"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.padding not in ("same", "valid"):
            raise ValueError(f"padding must be 'same' or 'valid', got {self.padding!r}")
        if self.padding == "valid" and self.kernel > self.p:
            raise ValueError(f"kernel width {self.kernel} exceeds sequence length {self.p} with valid padding")

    @property
    def seq_len(self):
        return self.p if self.padding == "same" else self.p - self.kernel + 1

    @property
    def gru_size(self):
        F, H = self.filters, self.hidden
        return 3 * (H * F + H * H + H)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def param_count(spec):
    F, k, H = spec.filters, spec.kernel, spec.hidden
    return F * k + F + 2 * spec.gru_size + (2 * H + 1)


@dataclass(frozen=True, eq=False)
class GRUParams:
    Wz: np.ndarray
    Uz: np.ndarray
    bz: np.ndarray
    Wr: np.ndarray
    Ur: np.ndarray
    br: np.ndarray
    Wn: np.ndarray
    Un: np.ndarray
    bn: np.ndarray

    def arrays(self):
        return [self.Wz, self.Uz, self.bz, self.Wr, self.Ur, self.br, self.Wn, self.Un, self.bn]


@dataclass(frozen=True, eq=False)
class NetParams:
    conv_w: np.ndarray  # (filters, kernel)
    conv_b: np.ndarray  # (filters,)
    forward: GRUParams
    backward: GRUParams
    head_w: np.ndarray  # (2 * hidden,)
    head_b: float


def unflatten(spec, vector):
    v = np.asarray(vector, dtype=np.float64)
    expected = param_count(spec)
    if v.ndim != 1 or v.shape[0] != expected:
        raise ValueError(f"expected {expected} parameters for {spec}, got {v.shape}")
    F, k, H = spec.filters, spec.kernel, spec.hidden
    pos = 0

    def take(*shape):
        nonlocal pos
        size = int(np.prod(shape))
        out = v[pos:pos + size].reshape(shape).copy()
        pos += size
        return out

    conv_w = take(F, k)
    conv_b = take(F)
    grus = []
    for _ in range(2):
        arrays = []
        for _gate in range(3):
            arrays += [take(H, F), take(H, H), take(H)]
        grus.append(GRUParams(*arrays))
    head_w = take(2 * H)
    head_b = float(take(1)[0])
    assert pos == expected
    return NetParams(conv_w, conv_b, grus[0], grus[1], head_w, head_b)


def flatten(params):
    parts = [params.conv_w.ravel(), params.conv_b.ravel()]
    for gru in (params.forward, params.backward):
        parts += [a.ravel() for a in gru.arrays()]
    parts += [params.head_w.ravel(), np.array([params.head_b])]
    return np.concatenate(parts).astype(np.float64)


def sigmoid(a):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-np.asarray(a, dtype=np.float64)))


def conv1d_forward(seq, spec, params, activation=np.tanh):
    """Convolve a length-``p`` sequence; returns an array of shape (T, filters).

    ``activation`` is exposed so tests can swap tanh for the identity.
    """
    seq = np.asarray(seq, dtype=np.float64)
    if seq.shape != (spec.p,):
        raise ValueError(f"expected a sequence of length {spec.p}, got shape {seq.shape}")
    k = spec.kernel
    if spec.padding == "same":
        left = (k - 1) // 2
        seq = np.concatenate([np.zeros(left), seq, np.zeros(k - 1 - left)])
    T = spec.seq_len
    out = np.empty((T, spec.filters))
    for t in range(T):
        out[t] = params.conv_b + params.conv_w @ seq[t:t + k]
    return activation(out)


def gru_cell_step(x_t, h_prev, gru):
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    H, F = gru.Wz.shape
    if x_t.shape != (F,) or h_prev.shape != (H,):
        raise ValueError(f"expected input ({F},) and state ({H},), got {x_t.shape} and {h_prev.shape}")
    z = sigmoid(gru.Wz @ x_t + gru.Uz @ h_prev + gru.bz)
    r = sigmoid(gru.Wr @ x_t + gru.Ur @ h_prev + gru.br)
    n = np.tanh(gru.Wn @ x_t + gru.Un @ (r * h_prev) + gru.bn)
    return (1.0 - z) * h_prev + z * n


def gru_forward(seq, gru):
    """Final hidden state of one GRU direction run over ``seq`` from h0 = 0."""
    h = np.zeros(gru.Wz.shape[0])
    for x_t in seq:
        h = gru_cell_step(x_t, h, gru)
    return h


def bigru_forward(seq, params):
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] == 0:
        raise ValueError("expected a non-empty (T, channels) sequence")
    return np.concatenate([gru_forward(seq, params.forward), gru_forward(seq[::-1], params.backward)])


def predict_one(spec, vector, x):
    """Reference forward pass for one scaled feature row."""
    params = unflatten(spec, vector)
    hidden = bigru_forward(conv1d_forward(x, spec, params), params)
    logit = float(params.head_w @ hidden + params.head_b)
    logit = min(max(logit, -kernels.LOGIT_CLIP), kernels.LOGIT_CLIP)
    return float(sigmoid(logit))


def _check(spec, vector, X):
    v = np.ascontiguousarray(vector, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != param_count(spec):
        raise ValueError(f"expected {param_count(spec)} parameters, got {v.shape}")
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != spec.p:
        raise ValueError(f"expected rows of {spec.p} features, got shape {X.shape}")
    return v, X


def predict(spec, vector, X):
    """Predict for a batch of scaled rows (or a single row); values lie in (0, 1)."""
    single = np.ndim(X) == 1
    v, X = _check(spec, vector, X)
    out = kernels.net_predict(v, X, spec.p, spec.filters, spec.kernel, spec.hidden, spec.padding == "same")
    return float(out[0]) if single else out


def fitness(spec, vector, train):
    """Training-set mean squared error of the network on a scaled dataset."""
    if len(train) == 0:
        raise ValueError("fitness needs a non-empty training set")
    v, X = _check(spec, vector, train.features)
    return float(kernels.net_mse(v, X, train.target, spec.p, spec.filters, spec.kernel, spec.hidden,
                                 spec.padding == "same"))


class FitnessFunction:
    """Picklable ``vector -> training MSE`` closure for the optimizer."""

    def __init__(self, spec, train):
        self.spec = spec
        self._X = np.ascontiguousarray(train.features, dtype=np.float64)
        self._y = np.ascontiguousarray(train.target, dtype=np.float64)
        if self._X.shape[0] == 0:
            raise ValueError("fitness needs a non-empty training set")
        if self._X.shape[1] != spec.p:
            raise ValueError(f"network expects {spec.p} features, data has {self._X.shape[1]}")
        self._dims = (spec.p, spec.filters, spec.kernel, spec.hidden, spec.padding == "same")
        self._n_params = param_count(spec)

    def __call__(self, vector):
        v = np.ascontiguousarray(vector, dtype=np.float64)
        if v.shape != (self._n_params,):
            raise ValueError(f"expected {self._n_params} parameters, got {v.shape}")
        return float(kernels.net_mse(v, self._X, self._y, *self._dims))
