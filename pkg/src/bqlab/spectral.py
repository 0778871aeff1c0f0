"""Wave functions, orthonormal systems, finite-rank operators and the propagator.

The propagator is the Fourier multiplier with symbol exp(i*t*sqrt(xi^4 + xi^2)),
applied exactly in frequency space: FFT modes on the line box and the torus,
radial eigenbasis coefficients on the unit ball.  Everything here is a pure
function of immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import (
    GEOMETRY_BALL,
    GEOMETRY_LINE,
    GEOMETRY_TORUS,
    Grid1D,
    _readonly,
)

#: pairwise orthonormality tolerance for declared systems
ORTHONORMALITY_TOL = 1e-8
#: relative residual below which Gram-Schmidt declares rank deficiency
GRAM_PIVOT_TOL = 1e-10
#: largest grid for which a dense kernel matrix is allowed
KERNEL_GRID_LIMIT = 4096

TWO_PI = 2.0 * math.pi


def boussinesq_symbol(xi):
    """Dispersion symbol sqrt(xi^4 + xi^2), written |xi|*sqrt(xi^2+1) so that
    evenness holds bitwise."""
    xi = np.abs(np.asarray(xi, dtype=float))
    return xi * np.sqrt(xi * xi + 1.0)


def ball_phase(m):
    """Eigenvalue phase speed sqrt((m*pi)^2 + (m*pi)^4) of the radial mode m >= 1."""
    return boussinesq_symbol(np.asarray(m, dtype=float) * math.pi)


def ball_basis(grid: Grid1D, n_modes: int) -> np.ndarray:
    """Matrix B[j, m] = sin((m+1)*pi*r_j) / (sqrt(2*pi) * r_j) of the first
    ``n_modes`` radial eigenfunctions sampled on ``grid``.

    Orthonormal under the grid's radial measure, exactly so for n_modes < n.
    """
    if grid.geometry != GEOMETRY_BALL:
        raise ValueError("eigenbasis is defined on ball-radial grids only")
    r = grid.points[:, None]
    m = np.arange(1, n_modes + 1)[None, :]
    return np.sin(m * math.pi * r) / (math.sqrt(TWO_PI) * r)


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class L2:
    """Plain L^2 inner product (cell-measure weighted)."""


@dataclass(frozen=True)
class HomSobolev:
    """Homogeneous Sobolev inner product: sum over nonzero frequencies of
    |xi|^(2s) fhat(xi) conj(ghat(xi)), normalized to agree with L2 at s=0."""

    s: float


@dataclass(frozen=True)
class WaveFunction:
    """Complex samples of a function on a Grid1D.

    Ball-radial functions carry their eigenbasis coefficients as the primary
    representation; point values are derived from them.
    """

    grid: Grid1D
    values: np.ndarray
    coeffs: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.n,):
            raise ValueError("values length must equal the grid size")
        if not np.all(np.isfinite(vals.view(float))):
            raise ValueError("wave function values must be finite")
        object.__setattr__(self, "values", _readonly(vals))
        if self.coeffs is not None:
            if self.grid.geometry != GEOMETRY_BALL:
                raise ValueError("eigenbasis coefficients only apply to ball-radial grids")
            c = np.asarray(self.coeffs, dtype=complex)
            object.__setattr__(self, "coeffs", _readonly(c))


def ball_wavefunction(grid: Grid1D, coeffs) -> WaveFunction:
    """Build a radial wave function from eigenbasis coefficients (values derived)."""
    c = np.asarray(coeffs, dtype=complex)
    return WaveFunction(grid, ball_basis(grid, c.size) @ c, coeffs=c)


def spectrum(f: WaveFunction) -> np.ndarray:
    """FFT of the samples (line/torus only)."""
    if f.grid.geometry == GEOMETRY_BALL:
        raise ValueError("ball-radial functions have no FFT spectrum")
    return np.fft.fft(f.values)


def inner_product(f: WaveFunction, g: WaveFunction, kind=L2()) -> complex:
    """<f, g> under L2 or homogeneous-Sobolev pairing (linear in f)."""
    if f.grid is not g.grid and f.grid != g.grid:
        raise ValueError("functions live on different grids")
    if isinstance(kind, L2):
        if f.grid.geometry == GEOMETRY_BALL and f.coeffs is not None and g.coeffs is not None:
            return complex(np.sum(f.coeffs * np.conj(g.coeffs)))
        return complex(np.sum(f.values * np.conj(g.values) * f.grid.cell_measure))
    if isinstance(kind, HomSobolev):
        if f.grid.geometry == GEOMETRY_BALL:
            raise ValueError("homogeneous Sobolev pairing is defined for line/torus grids")
        xi = f.grid.frequencies()
        weight = np.zeros_like(xi)
        nz = xi != 0
        weight[nz] = np.abs(xi[nz]) ** (2.0 * kind.s)
        scale = f.grid.spacing / f.grid.n
        return complex(scale * np.sum(weight * spectrum(f) * np.conj(spectrum(g))))
    raise TypeError(f"unknown inner product {kind!r}")


def l2_norm(f: WaveFunction) -> float:
    if f.grid.geometry == GEOMETRY_BALL and f.coeffs is not None:
        return float(np.linalg.norm(f.coeffs))
    return math.sqrt(abs(inner_product(f, f)))


# ---------------------------------------------------------------------------
# orthonormal systems and finite-rank operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrthonormalSystem:
    """A family of wave functions, pairwise orthonormal under the declared
    inner product to within ORTHONORMALITY_TOL."""

    functions: tuple[WaveFunction, ...]
    kind: object = L2()
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        if not self.functions:
            raise ValueError("orthonormal system must be nonempty")
        grid = self.functions[0].grid
        for f in self.functions:
            if f.grid is not grid and f.grid != grid:
                raise ValueError("all functions must share one grid")
        if self.validate:
            dev = gram_deviation(self.functions, self.kind)
            if dev > ORTHONORMALITY_TOL:
                raise ValueError(
                    f"system is not orthonormal: max |Gram - I| = {dev:.3e}"
                )

    @property
    def grid(self) -> Grid1D:
        return self.functions[0].grid

    @property
    def rank(self) -> int:
        return len(self.functions)


def gram_matrix(functions, kind=L2()) -> np.ndarray:
    functions = list(functions)
    r = len(functions)
    gram = np.empty((r, r), dtype=complex)
    for i, fi in enumerate(functions):
        for j in range(i, r):
            gram[i, j] = inner_product(fi, functions[j], kind)
            gram[j, i] = np.conj(gram[i, j])
    return gram


def gram_deviation(functions, kind=L2()) -> float:
    gram = gram_matrix(functions, kind)
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def gram_orthonormalize(raw, kind=L2()) -> OrthonormalSystem:
    """Modified Gram-Schmidt under the declared inner product.

    Raises ValueError naming the offending index when the residual of an input
    drops below GRAM_PIVOT_TOL relative to its original norm.
    """
    raw = list(raw)
    done: list[WaveFunction] = []
    for j, f in enumerate(raw):
        original = math.sqrt(abs(inner_product(f, f, kind)))
        if original == 0.0:
            raise ValueError(f"rank deficiency at input index {j}: zero function")
        vals = np.array(f.values)
        coeffs = None if f.coeffs is None else np.array(f.coeffs)
        current = WaveFunction(f.grid, vals, coeffs=coeffs)
        for _ in range(2):  # one re-orthogonalization pass for float robustness
            for q in done:
                c = inner_product(current, q, kind)
                vals = vals - c * q.values
                if coeffs is not None:
                    coeffs = coeffs - c * q.coeffs
                current = WaveFunction(f.grid, vals, coeffs=coeffs)
        norm = math.sqrt(abs(inner_product(current, current, kind)))
        if norm <= GRAM_PIVOT_TOL * original:
            raise ValueError(f"rank deficiency at input index {j}: dependent input")
        vals = vals / norm
        if coeffs is not None:
            coeffs = coeffs / norm
        done.append(WaveFunction(f.grid, vals, coeffs=coeffs))
    return OrthonormalSystem(tuple(done), kind)


@dataclass(frozen=True)
class CompactOperatorRep:
    """Finite-rank operator sum_j eigenvalues[j] |f_j><f_j| over an
    orthonormal system; Schatten norms reduce to sequence norms of the
    eigenvalues for this representation."""

    eigenvalues: np.ndarray
    system: OrthonormalSystem

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size != self.system.rank:
            raise ValueError("one eigenvalue per system function required")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        object.__setattr__(self, "eigenvalues", _readonly(lam))

    @property
    def grid(self) -> Grid1D:
        return self.system.grid

    @property
    def rank(self) -> int:
        return self.system.rank


@dataclass(frozen=True)
class DensityField:
    """Diagonal of the operator kernel at one time: sum_j lambda_j |u_j(x)|^2."""

    grid: Grid1D
    t: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError("density length must equal the grid size")
        object.__setattr__(self, "values", _readonly(vals))

    def integral(self) -> float:
        return float(np.sum(self.values * self.grid.cell_measure))


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


def propagate(f: WaveFunction, t: float) -> WaveFunction:
    """Apply the propagator for time t: multiply each frequency component by
    exp(i*t*sqrt(xi^4+xi^2)); unitary on L^2."""
    if f.grid.geometry == GEOMETRY_BALL:
        if f.coeffs is None:
            raise ValueError("ball propagation requires eigenbasis coefficients")
        m = np.arange(1, f.coeffs.size + 1)
        return ball_wavefunction(f.grid, f.coeffs * np.exp(1j * t * ball_phase(m)))
    phase = np.exp(1j * t * boussinesq_symbol(f.grid.frequencies()))
    return WaveFunction(f.grid, np.fft.ifft(np.fft.fft(f.values) * phase))


def truncated_propagate_torus(f: WaveFunction, t: float, n_max: int) -> WaveFunction:
    """Propagate the projection onto modes |k| <= n_max on the torus.

    Follows the convention that carries a 1/(2*pi) prefactor, so a single
    Fourier mode e^{ijx} with |j| <= n_max maps to a field of constant
    modulus 1/(2*pi).
    """
    if f.grid.geometry != GEOMETRY_TORUS:
        raise ValueError("truncated propagation is defined on the torus")
    if n_max < 0 or 2 * n_max > f.grid.n:
        raise ValueError(f"mode cutoff {n_max} beyond Nyquist limit {f.grid.n // 2}")
    k = f.grid.frequencies()
    mult = np.where(np.abs(k) <= n_max, np.exp(1j * t * boussinesq_symbol(k)), 0.0)
    return WaveFunction(f.grid, np.fft.ifft(np.fft.fft(f.values) * mult) / TWO_PI)


def values_matrix(system: OrthonormalSystem) -> np.ndarray:
    """Stack the sample values of a system into a (rank, n) matrix."""
    return np.array([f.values for f in system.functions])


def propagated_values(system: OrthonormalSystem, t: float, n_max: int | None = None) -> np.ndarray:
    """(rank, n) matrix of the system propagated to time t, batched over rank.

    With ``n_max`` set (torus only) uses the truncated propagator with its
    1/(2*pi) prefactor.
    """
    grid = system.grid
    if grid.geometry == GEOMETRY_BALL:
        if n_max is not None:
            raise ValueError("mode cutoff applies to the torus only")
        out = []
        for f in system.functions:
            out.append(propagate(f, t).values)
        return np.array(out)
    spectra = np.fft.fft(values_matrix(system), axis=1)
    k = grid.frequencies()
    mult = np.exp(1j * t * boussinesq_symbol(k))
    if n_max is not None:
        if grid.geometry != GEOMETRY_TORUS:
            raise ValueError("mode cutoff applies to the torus only")
        if 2 * n_max > grid.n:
            raise ValueError(f"mode cutoff {n_max} beyond Nyquist limit {grid.n // 2}")
        mult = np.where(np.abs(k) <= n_max, mult / TWO_PI, 0.0)
    return np.fft.ifft(spectra * mult, axis=1)


def density_function(op: CompactOperatorRep, t: float, grid: Grid1D | None = None) -> DensityField:
    """Pointwise sum_j lambda_j |propagate(f_j, t)(x)|^2."""
    if grid is not None and grid != op.grid:
        raise ValueError("density grid must match the operator's grid")
    u = propagated_values(op.system, t)
    rho = np.einsum("j,jx->x", op.eigenvalues, np.abs(u) ** 2)
    return DensityField(op.grid, t, rho)


def operator_kernel(op: CompactOperatorRep, t: float) -> np.ndarray:
    """Dense kernel matrix K(x, y) = sum_j lambda_j u_j(x) conj(u_j(y)).

    Hermitian; its diagonal equals the density field.  Refuses grids larger
    than KERNEL_GRID_LIMIT points.
    """
    n = op.grid.n
    if n > KERNEL_GRID_LIMIT:
        raise ValueError(f"grid size {n} exceeds kernel memory budget {KERNEL_GRID_LIMIT}")
    u = propagated_values(op.system, t)
    return (u.T * op.eigenvalues) @ np.conj(u)


def homogeneous_sobolev_lift(g: WaveFunction, s: float) -> WaveFunction:
    """Multiply Fourier coefficients by |xi|^(-s).

    Maps an L2-orthonormal mean-zero family to a HomSobolev(s)-orthonormal
    one.  Errors when the zero mode does not vanish.
    """
    if g.grid.geometry == GEOMETRY_BALL:
        raise ValueError("homogeneous lift is defined for line/torus grids")
    ghat = spectrum(g)
    scale = np.linalg.norm(ghat)
    if scale > 0 and abs(ghat[0]) > 1e-10 * scale:
        raise ValueError("zero frequency obstructs homogeneous lift")
    xi = g.grid.frequencies()
    mult = np.zeros_like(xi)
    nz = xi != 0
    mult[nz] = np.abs(xi[nz]) ** (-s)
    return WaveFunction(g.grid, np.fft.ifft(ghat * mult))


# ---------------------------------------------------------------------------
# system builders used across experiments and tests
# ---------------------------------------------------------------------------


def fourier_mode(grid: Grid1D, j: int, normalized: bool = True) -> WaveFunction:
    """The torus mode e^{ijx}, L2-normalized by 1/sqrt(2*pi) unless disabled."""
    if grid.geometry != GEOMETRY_TORUS:
        raise ValueError("fourier_mode lives on the torus")
    vals = np.exp(1j * j * grid.points)
    if normalized:
        vals = vals / math.sqrt(TWO_PI)
    return WaveFunction(grid, vals)


def line_mode(grid: Grid1D, m: int, normalized: bool = True) -> WaveFunction:
    """The line-box mode e^{i xi_m x} with xi_m = 2*pi*m/L, L2-normalized."""
    if grid.geometry != GEOMETRY_LINE:
        raise ValueError("line_mode lives on the line box")
    xi = TWO_PI * m / grid.period
    vals = np.exp(1j * xi * grid.points)
    if normalized:
        vals = vals / math.sqrt(grid.period)
    return WaveFunction(grid, vals)


def random_band_limited_system(
    grid: Grid1D,
    rank: int,
    max_mode: int,
    rng: np.random.Generator,
    kind=L2(),
    mean_zero: bool = False,
) -> OrthonormalSystem:
    """Random Gaussian coefficients on FFT modes with |index| <= max_mode,
    Gram-orthonormalized under ``kind``.

    ``mean_zero`` drops the zero mode, as required before a homogeneous
    Sobolev lift.
    """
    if grid.geometry == GEOMETRY_BALL:
        raise ValueError("use random_ball_system for ball-radial grids")
    n = grid.n
    if 2 * max_mode >= n:
        raise ValueError("max_mode beyond Nyquist")
    idx = np.r_[0 : max_mode + 1, n - max_mode : n] if max_mode > 0 else np.array([0])
    raw = []
    for _ in range(rank):
        coef = np.zeros(n, dtype=complex)
        coef[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
        if mean_zero:
            coef[0] = 0.0
        raw.append(WaveFunction(grid, np.fft.ifft(coef)))
    return gram_orthonormalize(raw, kind)


def random_ball_system(
    grid: Grid1D, rank: int, n_modes: int, rng: np.random.Generator
) -> OrthonormalSystem:
    """Random coefficient vectors on the first n_modes radial eigenfunctions,
    orthonormalized in coefficient space."""
    if grid.geometry != GEOMETRY_BALL:
        raise ValueError("random_ball_system needs a ball-radial grid")
    if n_modes >= grid.n:
        raise ValueError("n_modes must stay below the grid size for exact quadrature")
    raw = rng.standard_normal((n_modes, rank)) + 1j * rng.standard_normal((n_modes, rank))
    q, _ = np.linalg.qr(raw)
    funcs = tuple(ball_wavefunction(grid, q[:, j]) for j in range(rank))
    return OrthonormalSystem(funcs, L2())
