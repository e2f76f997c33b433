"""Matrix norms used by the soft parameter-sharing penalties.

The trace norm (sum of singular values) is computed with a hand-rolled
one-sided Jacobi SVD: the coupled weight matrices are small, and Jacobi is
simple, accurate, and easy to cap.
"""

from __future__ import annotations

import numpy as np

from ..errors import NumericalError, ShapeError
from .tensor import Tensor, _record, mul, sub, sum_all

_JACOBI_SWEEP_CAP = 100
_JACOBI_TOL = 1e-13


def frobenius_sq_distance(a: Tensor, b: Tensor) -> Tensor:
    """Taped scalar sum((a - b)^2); gradient wrt `a` is 2(a - b)."""
    if a.shape != b.shape:
        raise ShapeError(f"frobenius_sq_distance shapes disagree: {a.shape} vs {b.shape}")
    d = sub(a, b)
    return sum_all(mul(d, d))


def frobenius_norm(w) -> float:
    data = w.data if isinstance(w, Tensor) else np.asarray(w, dtype=np.float64)
    return float(np.sqrt((data * data).sum()))


def jacobi_svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD a = u @ diag(s) @ vt via one-sided Jacobi column rotations.

    Works on the tall orientation internally; singular values come back in
    descending order. Raises NumericalError if the sweeps do not converge.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"jacobi_svd needs a non-empty 2-D matrix, got {a.shape}")
    transposed = a.shape[0] < a.shape[1]
    u = (a.T if transposed else a).copy()
    n = u.shape[1]
    v = np.eye(n)

    for _ in range(_JACOBI_SWEEP_CAP):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(u[:, p] @ u[:, p])
                beta = float(u[:, q] @ u[:, q])
                gamma = float(u[:, p] @ u[:, q])
                if abs(gamma) <= _JACOBI_TOL * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                up, uq = u[:, p].copy(), u[:, q].copy()
                u[:, p] = c * up - s * uq
                u[:, q] = s * up + c * uq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        if not rotated:
            break
    else:
        norms = np.sqrt((u * u).sum(axis=0))
        cond = norms.max() / max(norms.min(), 1e-300)
        raise NumericalError(
            f"one-sided Jacobi SVD did not converge in {_JACOBI_SWEEP_CAP} sweeps "
            f"(shape {a.shape}, column-norm condition estimate {cond:.3e})"
        )

    sigma = np.sqrt((u * u).sum(axis=0))
    order = np.argsort(-sigma)
    sigma = sigma[order]
    u = u[:, order]
    v = v[:, order]
    # normalize left vectors; a zero singular value leaves a zero column,
    # which drops that direction from the subgradient (non-smooth case)
    nonzero = sigma > _JACOBI_TOL * max(float(sigma[0]), 1.0)
    u = np.where(nonzero, u / np.where(nonzero, sigma, 1.0), 0.0)
    if transposed:
        return v, sigma, u.T
    return u, sigma, v.T


def trace_norm(w) -> tuple[float, np.ndarray]:
    """Sum of singular values and its subgradient u @ vt (thin SVD)."""
    data = w.data if isinstance(w, Tensor) else np.asarray(w, dtype=np.float64)
    u, sigma, vt = jacobi_svd(data)
    return float(sigma.sum()), u @ vt


def trace_norm_penalty(w: Tensor) -> Tensor:
    """Taped scalar trace norm so the penalty can join a loss graph."""
    value, subgrad = trace_norm(w)
    out = Tensor(value)
    return _record(out, (w,), lambda g: (float(g) * subgrad,))
