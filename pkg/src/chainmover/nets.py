"""Tiny reverse-mode autodiff over numpy arrays, MLP policy/value networks, Adam,
and the versioned binary checkpoint format.

Networks here are small ([512, 256, 128] at most, [64, 64] for smoke tests), so
an in-repo tape keeps the whole training stack dependency-free and lets gradient
checks pin correctness end to end.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ShapeError

CHECKPOINT_MAGIC = b"CMCK"
CHECKPOINT_VERSION = 1


# --------------------------------------------------------------------------
# Autodiff tape
# --------------------------------------------------------------------------

class Var:
    """A node in the computation graph: float64 array value plus backward rule."""

    __slots__ = ("value", "grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    # -- graph traversal --

    def backward(self) -> None:
        order = []
        seen = set()

        def visit(v):
            if id(v) in seen:
                return
            seen.add(id(v))
            for p in v._parents:
                visit(p)
            order.append(v)

        visit(self)
        for v in order:
            v.grad = np.zeros_like(v.value)
        self.grad = np.ones_like(self.value)
        for v in reversed(order):
            if v._backward is None:
                continue
            for p, g in zip(v._parents, v._backward(v.grad)):
                if g is not None:
                    p.grad += _unbroadcast(g, p.value.shape)

    # -- operators --

    def __add__(self, other):
        o = _as_var(other)
        return Var(self.value + o.value, (self, o), lambda g: (g, g))

    __radd__ = __add__

    def __sub__(self, other):
        o = _as_var(other)
        return Var(self.value - o.value, (self, o), lambda g: (g, -g))

    def __rsub__(self, other):
        o = _as_var(other)
        return Var(o.value - self.value, (self, o), lambda g: (-g, g))

    def __mul__(self, other):
        o = _as_var(other)
        return Var(self.value * o.value, (self, o),
                   lambda g: (g * o.value, g * self.value))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_var(other)
        return Var(self.value / o.value, (self, o),
                   lambda g: (g / o.value, -g * self.value / (o.value ** 2)))

    def __neg__(self):
        return Var(-self.value, (self,), lambda g: (-g,))

    def __pow__(self, k: float):
        return Var(self.value ** k, (self,),
                   lambda g: (g * k * self.value ** (k - 1),))


def _as_var(x) -> Var:
    return x if isinstance(x, Var) else Var(x)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad.reshape(shape)


def matmul(a: Var, b: Var) -> Var:
    return Var(a.value @ b.value, (a, b),
               lambda g: (g @ b.value.T, a.value.T @ g))


def tanh(x: Var) -> Var:
    y = np.tanh(x.value)
    return Var(y, (x,), lambda g: (g * (1.0 - y * y),))


def elu(x: Var) -> Var:
    e = np.exp(np.minimum(x.value, 0.0))
    y = np.where(x.value > 0, x.value, e - 1.0)
    d = np.where(x.value > 0, 1.0, e)
    return Var(y, (x,), lambda g: (g * d,))


def exp(x: Var) -> Var:
    y = np.exp(x.value)
    return Var(y, (x,), lambda g: (g * y,))


def log(x: Var) -> Var:
    return Var(np.log(x.value), (x,), lambda g: (g / x.value,))


def vsum(x: Var, axis=None) -> Var:
    def back(g):
        if axis is None:
            return (np.broadcast_to(g, x.value.shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), x.value.shape).copy(),)
    return Var(x.value.sum(axis=axis), (x,), back)


def vmean(x: Var, axis=None) -> Var:
    n = x.value.size if axis is None else x.value.shape[axis]
    return vsum(x, axis) * (1.0 / n)


def clip(x: Var, lo: float, hi: float) -> Var:
    inside = (x.value >= lo) & (x.value <= hi)
    return Var(np.clip(x.value, lo, hi), (x,), lambda g: (g * inside,))


def minimum(a: Var, b: Var) -> Var:
    take_a = a.value <= b.value
    return Var(np.minimum(a.value, b.value), (a, b),
               lambda g: (g * take_a, g * (~take_a)))


# --------------------------------------------------------------------------
# Networks
# --------------------------------------------------------------------------

class Mlp:
    """Fully connected net with ELU hidden activations and a linear output."""

    def __init__(self, sizes: Sequence[int], rng: np.random.Generator,
                 out_scale: float = 1.0):
        self.sizes = tuple(int(s) for s in sizes)
        self.params: list[Var] = []
        for i, (n_in, n_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            scale = np.sqrt(2.0 / n_in)
            if i == len(self.sizes) - 2:
                scale *= out_scale
            self.params.append(Var(rng.normal(0.0, scale, size=(n_in, n_out))))
            self.params.append(Var(np.zeros(n_out)))

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    def forward_var(self, x: Var) -> Var:
        n_layers = len(self.sizes) - 1
        h = x
        for i in range(n_layers):
            h = matmul(h, self.params[2 * i]) + self.params[2 * i + 1]
            if i < n_layers - 1:
                h = elu(h)
        return h

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Tape-free forward pass for rollouts."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"expected input dim {self.in_dim}, got {x.shape[-1]}")
        n_layers = len(self.sizes) - 1
        h = x
        for i in range(n_layers):
            h = h @ self.params[2 * i].value + self.params[2 * i + 1].value
            if i < n_layers - 1:
                h = np.where(h > 0, h, np.exp(np.minimum(h, 0.0)) - 1.0)
        return h


LOG_STD_MIN, LOG_STD_MAX = -4.0, 1.0
LOG_2PI = float(np.log(2.0 * np.pi))


class PolicyNet:
    """Gaussian policy in pre-squash space; emitted actions are tanh-mapped into
    the action bounds, so every action is legal by construction.

    The log-std is a learned, state-independent parameter vector.
    """

    def __init__(self, obs_dim: int, act_low: Sequence[float], act_high: Sequence[float],
                 hidden: Sequence[int], rng: np.random.Generator,
                 init_log_std=-0.7):
        self.obs_dim = int(obs_dim)
        self.act_low = np.asarray(act_low, dtype=np.float64)
        self.act_high = np.asarray(act_high, dtype=np.float64)
        self.mid = (self.act_low + self.act_high) / 2.0
        self.half = (self.act_high - self.act_low) / 2.0
        self.hidden = tuple(hidden)
        self.mlp = Mlp([obs_dim, *hidden, len(self.mid)], rng, out_scale=0.01)
        # init_log_std may be per-dimension so exploration matches action scale.
        self.log_std = Var(np.broadcast_to(
            np.asarray(init_log_std, dtype=np.float64), (len(self.mid),)).copy())

    @property
    def params(self) -> list[Var]:
        return self.mlp.params + [self.log_std]

    def forward(self, obs: np.ndarray):
        """Deterministic head outputs: (squashed action mean, log-std)."""
        raw = self.mlp.forward(obs)
        mean = self.mid + self.half * np.tanh(raw)
        log_std = np.clip(self.log_std.value, LOG_STD_MIN, LOG_STD_MAX)
        return mean, log_std

    def act_deterministic(self, obs: np.ndarray) -> np.ndarray:
        return self.forward(obs)[0]

    def sample(self, obs: np.ndarray, rng: np.random.Generator):
        """Returns (action, pre_squash_sample, log_prob)."""
        raw = self.mlp.forward(obs)
        log_std = np.clip(self.log_std.value, LOG_STD_MIN, LOG_STD_MAX)
        std = np.exp(log_std)
        u = raw + std * rng.standard_normal(raw.shape)
        action = self.mid + self.half * np.tanh(u)
        logp = self._log_prob_np(raw, log_std, u)
        return action, u, logp

    def _squash_correction(self, u: np.ndarray) -> np.ndarray:
        th = np.tanh(u)
        return np.log(self.half * (1.0 - th * th) + 1e-9).sum(axis=-1)

    def _log_prob_np(self, raw, log_std, u):
        z = (u - raw) / np.exp(log_std)
        gauss = (-0.5 * z * z - log_std - 0.5 * LOG_2PI).sum(axis=-1)
        return gauss - self._squash_correction(u)

    def log_prob_var(self, obs: np.ndarray, u: np.ndarray) -> Var:
        """Differentiable log-prob of stored pre-squash samples under current params."""
        raw = self.mlp.forward_var(Var(obs))
        log_std = clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)
        inv_std = exp(-log_std)
        z = (Var(u) - raw) * inv_std
        gauss = vsum(z * z * (-0.5) - log_std, axis=-1) + (-0.5 * LOG_2PI * u.shape[-1])
        return gauss + Var(-self._squash_correction(u))

    def entropy_var(self) -> Var:
        """Gaussian entropy of the pre-squash distribution (per action)."""
        log_std = clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX)
        return vsum(log_std) + 0.5 * (1.0 + LOG_2PI) * len(self.mid)


class CriticNet:
    def __init__(self, obs_dim: int, hidden: Sequence[int], rng: np.random.Generator):
        self.obs_dim = int(obs_dim)
        self.hidden = tuple(hidden)
        self.mlp = Mlp([obs_dim, *hidden, 1], rng)

    @property
    def params(self) -> list[Var]:
        return self.mlp.params

    def value(self, obs: np.ndarray) -> np.ndarray:
        return self.mlp.forward(obs)[..., 0]

    def value_var(self, obs: np.ndarray) -> Var:
        v = self.mlp.forward_var(Var(obs))
        return Var(v.value[..., 0], (v,),
                   lambda g: (np.expand_dims(g, -1),))


# --------------------------------------------------------------------------
# Optimizer
# --------------------------------------------------------------------------

class Adam:
    def __init__(self, params: Iterable[Var], lr: float = 3e-4,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self) -> None:
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            mhat = self.m[i] / (1 - self.b1 ** self.t)
            vhat = self.v[i] / (1 - self.b2 ** self.t)
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def clip_grad_norm(params: Sequence[Var], max_norm: float) -> float:
    total = np.sqrt(sum(float((p.grad ** 2).sum()) for p in params))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for p in params:
            p.grad *= scale
    return total


# --------------------------------------------------------------------------
# Flattening helpers (grad checks, checkpoints)
# --------------------------------------------------------------------------

def flatten_params(params: Sequence[Var]) -> np.ndarray:
    return np.concatenate([p.value.ravel() for p in params])


def set_flat_params(params: Sequence[Var], flat: np.ndarray) -> None:
    if sum(p.value.size for p in params) != flat.size:
        raise ShapeError("flat parameter vector has wrong length")
    off = 0
    for p in params:
        n = p.value.size
        p.value = flat[off:off + n].reshape(p.value.shape).astype(np.float64)
        off += n


# --------------------------------------------------------------------------
# Checkpoints: magic, version, JSON header, float64 little-endian payload
# --------------------------------------------------------------------------

def save_checkpoint(path: str, meta: dict, params: Sequence[Var]) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    header = dict(meta)
    header["param_shapes"] = [list(p.value.shape) for p in params]
    blob = json.dumps(header).encode("utf-8")
    payload = flatten_params(params).astype("<f8").tobytes()
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(CHECKPOINT_MAGIC)
            f.write(struct.pack("<HI", CHECKPOINT_VERSION, len(blob)))
            f.write(blob)
            f.write(payload)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def load_checkpoint(path: str) -> tuple[dict, list[np.ndarray]]:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, hlen = struct.unpack("<HI", f.read(6))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        meta = json.loads(f.read(hlen).decode("utf-8"))
        flat = np.frombuffer(f.read(), dtype="<f8")
    arrays = []
    off = 0
    for shape in meta["param_shapes"]:
        n = int(np.prod(shape)) if shape else 1
        arrays.append(flat[off:off + n].reshape(shape).copy())
        off += n
    return meta, arrays
