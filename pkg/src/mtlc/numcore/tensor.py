"""Dense float64 tensors with taped reverse-mode automatic differentiation.

A `GradTape` is a Wengert list: ops executed while a tape is active append
one record each, and `backward` replays the records in reverse, which is a
reverse topological order by construction. Only float64 is supported; the
models here are small enough that precision beats speed.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import ContractError, ShapeError

Array = np.ndarray


class Tensor:
    """A dense float64 array plus autodiff bookkeeping.

    `grad` is populated (and accumulated) by `backward`; `name` lets the
    optimizer and checkpoints address parameters.
    """

    __slots__ = ("data", "requires_grad", "name", "grad")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.name = name
        self.grad: Optional[Array] = None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{tag})"


class GradTape:
    """Ordered record of primitive ops, replayed in reverse for adjoints."""

    def __init__(self):
        # each record: (id(output), input tensors, backward fn)
        self._records: list[tuple[int, tuple[Tensor, ...], Callable]] = []
        self._produced: set[int] = set()
        self._watched: dict[int, Tensor] = {}

    def __enter__(self) -> "GradTape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        popped = _ACTIVE.pop()
        assert popped is self

    def _add(self, out: Tensor, inputs: tuple[Tensor, ...], bwd: Callable) -> None:
        for t in inputs:
            if t.requires_grad and id(t) not in self._produced:
                self._watched.setdefault(id(t), t)
        self._records.append((id(out), inputs, bwd))
        self._produced.add(id(out))

    def __len__(self) -> int:
        return len(self._records)


_ACTIVE: list[GradTape] = []


def _record(out: Tensor, inputs: tuple[Tensor, ...], bwd: Callable) -> Tensor:
    """Attach `out` to the active tape if any input participates in autodiff."""
    if _ACTIVE and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        _ACTIVE[-1]._add(out, inputs, bwd)
    return out


def backward(tape: GradTape, loss: Tensor) -> dict[str, Array]:
    """Accumulate gradients of `loss` into every watched leaf's `.grad`.

    Returns the per-pass gradients keyed by parameter name for every named
    leaf the tape saw; leaves off the path from `loss` get zero arrays.
    """
    if loss.shape != ():
        raise ContractError(f"backward seed must be scalar, got shape {loss.shape}")
    if id(loss) not in tape._produced:
        raise ContractError("loss was not produced by ops recorded on this tape")
    adjoint: dict[int, Array] = {id(loss): np.ones(())}
    for out_id, inputs, bwd in reversed(tape._records):
        g = adjoint.pop(out_id, None)
        if g is None:
            continue
        for t, gi in zip(inputs, bwd(g)):
            if gi is None or not t.requires_grad:
                continue
            prev = adjoint.get(id(t))
            adjoint[id(t)] = gi if prev is None else prev + gi
    named: dict[str, Array] = {}
    for tid, t in tape._watched.items():
        g = adjoint.get(tid)
        if g is None:
            g = np.zeros_like(t.data)
        t.grad = g if t.grad is None else t.grad + g
        if t.name is not None:
            named[t.name] = g
    return named


def _unbroadcast(g: Array, shape: tuple) -> Array:
    """Sum `g` back down to `shape` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------


def add(a: Tensor, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data + b.data)
    return _record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a: Tensor, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data - b.data)
    return _record(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a: Tensor, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    out = Tensor(a.data * b.data)
    return _record(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def neg(x: Tensor) -> Tensor:
    out = Tensor(-x.data)
    return _record(out, (x,), lambda g: (-g,))


def scale(x: Tensor, c: float) -> Tensor:
    """Multiply by a python constant (no gradient flows to `c`)."""
    c = float(c)
    out = Tensor(x.data * c)
    return _record(out, (x,), lambda g: (g * c,))


def pow_const(x: Tensor, p: float) -> Tensor:
    p = float(p)
    out = Tensor(x.data**p)
    return _record(out, (x,), lambda g: (g * p * x.data ** (p - 1.0),))


# ---------------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    """Elementwise max(0, x); subgradient at 0 is 0."""
    out = Tensor(np.maximum(x.data, 0.0))
    return _record(out, (x,), lambda g: (g * (x.data > 0.0),))


def sigmoid(x: Tensor) -> Tensor:
    """Elementwise e^x / (e^x + 1), computed via tanh for stability."""
    s = 0.5 * (np.tanh(0.5 * x.data) + 1.0)
    out = Tensor(s)
    return _record(out, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    out = Tensor(t)
    return _record(out, (x,), lambda g: (g * (1.0 - t * t),))


def exp(x: Tensor) -> Tensor:
    e = np.exp(x.data)
    out = Tensor(e)
    return _record(out, (x,), lambda g: (g * e,))


def log(x: Tensor) -> Tensor:
    out = Tensor(np.log(x.data))
    return _record(out, (x,), lambda g: (g / x.data,))


# ---------------------------------------------------------------------------
# matrix / shape ops
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Standard 2-D matrix product [m,k] @ [k,n] -> [m,n]."""
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} vs {b.shape}")
    out = Tensor(a.data @ b.data)
    return _record(out, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"transpose needs a 2-D tensor, got {x.shape}")
    out = Tensor(x.data.T.copy())
    return _record(out, (x,), lambda g: (g.T.copy(),))


def reshape(x: Tensor, shape) -> Tensor:
    old = x.shape
    out = Tensor(x.data.reshape(shape))
    return _record(out, (x,), lambda g: (g.reshape(old),))


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(x.data.sum())
    return _record(out, (x,), lambda g: (np.full(x.shape, float(g)),))


def mean_all(x: Tensor) -> Tensor:
    return scale(sum_all(x), 1.0 / x.size)


def take(x: Tensor, index: int) -> Tensor:
    """Scalar element of a 1-D tensor."""
    if x.data.ndim != 1:
        raise ShapeError(f"take needs a 1-D tensor, got {x.shape}")
    if not 0 <= index < x.shape[0]:
        raise ContractError(f"index {index} out of range for length {x.shape[0]}")

    def bwd(g):
        gx = np.zeros(x.shape)
        gx[index] = float(g)
        return (gx,)

    return _record(Tensor(x.data[index]), (x,), bwd)


def gather_rows(x: Tensor, ids: Sequence[int]) -> Tensor:
    """Rows `ids` of a 2-D tensor; repeated ids accumulate in the gradient."""
    if x.data.ndim != 2:
        raise ShapeError(f"gather_rows needs a 2-D tensor, got {x.shape}")
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise ContractError(f"row id out of range 0..{x.shape[0] - 1}")

    def bwd(g):
        gx = np.zeros(x.shape)
        np.add.at(gx, idx, g)
        return (gx,)

    return _record(Tensor(x.data[idx]), (x,), bwd)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"slice_rows needs a 2-D tensor, got {x.shape}")

    def bwd(g):
        gx = np.zeros(x.shape)
        gx[start:stop] = g
        return (gx,)

    return _record(Tensor(x.data[start:stop].copy()), (x,), bwd)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    if x.data.ndim != 2:
        raise ShapeError(f"slice_cols needs a 2-D tensor, got {x.shape}")

    def bwd(g):
        gx = np.zeros(x.shape)
        gx[:, start:stop] = g
        return (gx,)

    return _record(Tensor(x.data[:, start:stop].copy()), (x,), bwd)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = list(parts)
    widths = [p.shape[1] for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=1))

    def bwd(g):
        outs, c = [], 0
        for w in widths:
            outs.append(g[:, c : c + w])
            c += w
        return tuple(outs)

    return _record(out, tuple(parts), bwd)


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    parts = list(parts)
    heights = [p.shape[0] for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=0))

    def bwd(g):
        outs, r = [], 0
        for h in heights:
            outs.append(g[r : r + h])
            r += h
        return tuple(outs)

    return _record(out, tuple(parts), bwd)


def stack_rows(parts: Sequence[Tensor]) -> Tensor:
    """Stack 1-D tensors of equal length into a 2-D [len(parts), n] tensor."""
    parts = list(parts)
    out = Tensor(np.stack([p.data for p in parts], axis=0))
    return _record(out, tuple(parts), lambda g: tuple(g[i] for i in range(len(parts))))


# ---------------------------------------------------------------------------
# reductions with custom stable kernels
# ---------------------------------------------------------------------------


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax of a 2-D tensor, stabilized by max subtraction."""
    if x.data.ndim != 2:
        raise ShapeError(f"softmax_rows needs a 2-D tensor, got {x.shape}")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)
    out = Tensor(y)
    return _record(out, (x,), lambda g: (y * (g - (g * y).sum(axis=1, keepdims=True)),))


def log_sum_exp(x: Tensor) -> Tensor:
    """Scalar log(sum(exp(x))) of a 1-D tensor; gradient is softmax(x)."""
    if x.data.ndim != 1:
        raise ShapeError(f"log_sum_exp needs a 1-D tensor, got {x.shape}")
    m = x.data.max()
    e = np.exp(x.data - m)
    z = e.sum()
    out = Tensor(m + np.log(z))
    return _record(out, (x,), lambda g: (float(g) * e / z,))


def layer_norm_rows(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize each row of a 2-D tensor to zero mean / unit variance, then
    apply a learned per-column gain and bias."""
    if x.data.ndim != 2:
        raise ShapeError(f"layer_norm_rows needs a 2-D tensor, got {x.shape}")
    n = x.shape[1]
    if gain.shape != (n,) or bias.shape != (n,):
        raise ShapeError(f"gain/bias must be shape ({n},), got {gain.shape}/{bias.shape}")
    mu = x.data.mean(axis=1, keepdims=True)
    var = ((x.data - mu) ** 2).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = Tensor(xhat * gain.data + bias.data)

    def bwd(g):
        dxhat = g * gain.data
        gx = inv * (
            dxhat
            - dxhat.mean(axis=1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=1, keepdims=True)
        )
        return gx, (g * xhat).sum(axis=0), g.sum(axis=0)

    return _record(out, (x, gain, bias), bwd)


# ---------------------------------------------------------------------------
# stochastic ops
# ---------------------------------------------------------------------------


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Zero each element with probability `p` and rescale survivors by
    1/(1-p) while training; exact identity at inference."""
    if not 0.0 <= p < 1.0:
        raise ContractError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    out = Tensor(x.data * keep)
    return _record(out, (x,), lambda g: (g * keep,))
