"""Mixed space-time, weak Lorentz, Schatten and sequence norms.

Discrete realizations: integrals are cell-measure weighted Riemann sums,
L^infinity in any variable is the max over samples, the weak Lorentz norm
uses the decreasing rearrangement of the samples, and Schatten norms are
sequence norms of singular values after symmetrizing with the square root
of the quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import Grid1D, TimeGrid, _readonly
from .spectral import CompactOperatorRep

TIME_OUTER = "time-outer"
SPACE_OUTER = "space-outer"

#: agreement tolerance for the Schatten-2 / kernel-L2 identity
SCHATTEN2_KERNEL_TOL = 1e-8


def conjugate_exponent(p: float) -> float:
    """p' with 1/p + 1/p' = 1; conjugates 1 and infinity to each other."""
    if p < 1:
        raise ValueError("exponents live in [1, inf]")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _check_exponent(p: float, name: str = "exponent"):
    if not (p >= 1):
        raise ValueError(f"{name} must be >= 1 (got {p})")


@dataclass(frozen=True)
class Mixed:
    p: float
    q: float
    order: str = TIME_OUTER

    def __post_init__(self):
        _check_exponent(self.p, "p")
        _check_exponent(self.q, "q")
        if self.order not in (TIME_OUTER, SPACE_OUTER):
            raise ValueError("order must be time-outer or space-outer")

    def conjugate(self) -> "Mixed":
        return Mixed(conjugate_exponent(self.p), conjugate_exponent(self.q), self.order)


@dataclass(frozen=True)
class Lorentz:
    p: float
    r: float = math.inf

    def __post_init__(self):
        _check_exponent(self.p, "p")
        _check_exponent(self.r, "r")

    def conjugate_p(self) -> float:
        return conjugate_exponent(self.p)


@dataclass(frozen=True)
class Schatten:
    alpha: float

    def __post_init__(self):
        _check_exponent(self.alpha, "alpha")

    def conjugate(self) -> "Schatten":
        return Schatten(conjugate_exponent(self.alpha))


@dataclass(frozen=True)
class Sequence:
    beta: float

    def __post_init__(self):
        _check_exponent(self.beta, "beta")

    def conjugate(self) -> "Sequence":
        return Sequence(conjugate_exponent(self.beta))


@dataclass(frozen=True)
class SpaceTimeField:
    """Samples F(t_i, x_j) on a time grid times a Grid1D."""

    tgrid: TimeGrid
    xgrid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.tgrid.n, self.xgrid.n):
            raise ValueError("field shape must be (n_t, n_x)")
        if not np.all(np.isfinite(vals.view(float) if np.iscomplexobj(vals) else vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _readonly(vals))


def _power_mean(samples: np.ndarray, weights, p: float, axis: int):
    """(sum |samples|^p * weights)^(1/p) along axis; max when p = inf."""
    mags = np.abs(samples)
    if math.isinf(p):
        return np.max(mags, axis=axis)
    return np.sum(mags**p * weights, axis=axis) ** (1.0 / p)


def mixed_norm(field: SpaceTimeField, p: float, q: float, order: str = TIME_OUTER) -> float:
    """Iterated norm of a space-time field.

    ``time-outer`` computes L^p_t L^q_x (inner integral over x), ``space-outer``
    computes L^p_x L^q_t.  Infinite exponents become maxima over samples.
    """
    _check_exponent(p, "p")
    _check_exponent(q, "q")
    if order == TIME_OUTER:
        inner = _power_mean(field.values, field.xgrid.cell_measure[None, :], q, axis=1)
        return float(_power_mean(inner, field.tgrid.dt, p, axis=0))
    if order == SPACE_OUTER:
        inner = _power_mean(field.values, field.tgrid.dt, q, axis=0)
        return float(_power_mean(inner, field.xgrid.cell_measure, p, axis=0))
    raise ValueError("order must be time-outer or space-outer")


def lorentz_weak_norm(samples, p: float, weights=None, grid: Grid1D | None = None) -> float:
    """Weak Lorentz norm sup_s s * measure(|f| > s)^(1/p) of sampled data.

    Computed from the decreasing rearrangement: with samples sorted so that
    |f|_(1) >= |f|_(2) >= ..., the norm is max_k |f|_(k) * (mu_k)^(1/p) where
    mu_k accumulates the cell measures in rearranged order.
    """
    if not (1 <= p < math.inf):
        raise ValueError("weak Lorentz exponent must be finite and >= 1")
    mags = np.abs(np.asarray(samples, dtype=float).ravel())
    if grid is not None:
        weights = grid.cell_measure
    if weights is None:
        raise ValueError("pass per-sample weights or a grid")
    w = np.broadcast_to(np.asarray(weights, dtype=float), mags.shape)
    order = np.argsort(mags)[::-1]
    sorted_mags = mags[order]
    cum = np.cumsum(w[order])
    if sorted_mags.size == 0 or sorted_mags[0] == 0.0:
        return 0.0
    return float(np.max(sorted_mags * cum ** (1.0 / p)))


def sequence_norm(lam, beta: float) -> float:
    """Plain ell^beta norm; beta = inf gives the max."""
    _check_exponent(beta, "beta")
    mags = np.abs(np.asarray(lam, dtype=float).ravel())
    if mags.size == 0:
        return 0.0
    if math.isinf(beta):
        return float(np.max(mags))
    return float(np.sum(mags**beta) ** (1.0 / beta))


def singular_values(matrix: np.ndarray, weights=None) -> np.ndarray:
    """Decreasing singular values of D^(1/2) M D^(1/2), D = diag(weights).

    With unit weights this is the plain SVD; with cell measures it is the
    operator discretized on L^2(grid).
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("square matrix required")
    if not np.all(np.isfinite(m.view(float) if np.iscomplexobj(m) else m)):
        raise ValueError("matrix entries must be finite")
    if weights is not None:
        root = np.sqrt(np.asarray(weights, dtype=float))
        if root.shape != (m.shape[0],):
            raise ValueError("one weight per matrix row required")
        m = root[:, None] * m * root[None, :]
    return np.linalg.svd(m, compute_uv=False)


def schatten_norm(op, alpha: float, weights=None) -> float:
    """Schatten norm: ell^alpha of singular values.

    Accepts either a CompactOperatorRep (returns the sequence norm of its
    eigenvalues directly, the exact identity for that representation) or a
    dense kernel matrix together with quadrature weights.
    """
    _check_exponent(alpha, "alpha")
    if isinstance(op, CompactOperatorRep):
        return sequence_norm(op.eigenvalues, alpha)
    return sequence_norm(singular_values(op, weights), alpha)


def kernel_l2_norm(kernel: np.ndarray, weights) -> float:
    """L^2(dx dy) norm of a kernel matrix; equals its Schatten-2 norm."""
    w = np.asarray(weights, dtype=float)
    return float(math.sqrt(np.sum(np.abs(kernel) ** 2 * w[:, None] * w[None, :])))


def evaluate(spec, data, **kw) -> float:
    """Dispatch a NormSpec descriptor onto the matching computation."""
    if isinstance(spec, Mixed):
        return mixed_norm(data, spec.p, spec.q, spec.order)
    if isinstance(spec, Lorentz):
        if not math.isinf(spec.r):
            raise NotImplementedError("only the weak (r = inf) Lorentz norm is computed")
        return lorentz_weak_norm(data, spec.p, **kw)
    if isinstance(spec, Schatten):
        return schatten_norm(data, spec.alpha, **kw)
    if isinstance(spec, Sequence):
        return sequence_norm(data, spec.beta)
    raise TypeError(f"unknown norm descriptor {spec!r}")
