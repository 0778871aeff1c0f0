"""Randomization of wave functions and compact operators, with Monte-Carlo
machinery for Khinchin ratios and stochastic continuity experiments.

Two independent counter-based streams drive everything: one for the
function randomization (the frequency-block draws), one for the eigenvalue
draws.  Identical seeds give bitwise identical outputs; Monte-Carlo loops
draw in a fixed order and reduce by ordered summation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import GEOMETRY_BALL, GEOMETRY_LINE, GEOMETRY_TORUS, Grid1D
from .oscillatory import flat_window
from .spectral import (
    CompactOperatorRep,
    DensityField,
    WaveFunction,
    ball_basis,
    ball_phase,
    ball_wavefunction,
    boussinesq_symbol,
    density_function,
    propagate,
    spectrum,
)

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"


@dataclass(frozen=True)
class RandomSeedPair:
    """The two stream seeds: function randomization and eigenvalue draws."""

    seed_omega: int
    seed_eigen: int

    def rngs(self) -> tuple[np.random.Generator, np.random.Generator]:
        return (
            np.random.Generator(np.random.Philox(self.seed_omega)),
            np.random.Generator(np.random.Philox(self.seed_eigen)),
        )


def draws(rng: np.random.Generator, size, distribution: str = GAUSSIAN) -> np.ndarray:
    """Zero-mean unit-variance draws; Rademacher offered for robustness checks."""
    if distribution == GAUSSIAN:
        return rng.standard_normal(size)
    if distribution == RADEMACHER:
        return rng.integers(0, 2, size=size) * 2.0 - 1.0
    raise ValueError(f"unknown distribution {distribution!r}")


def gaussian_abs_moment(r: float) -> float:
    """E|g|^r for a standard Gaussian: 2^(r/2) Gamma((r+1)/2) / sqrt(pi)."""
    return 2.0 ** (r / 2.0) * math.gamma((r + 1.0) / 2.0) / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# the three function randomizations
# ---------------------------------------------------------------------------


def wiener_window_indices(grid: Grid1D) -> np.ndarray:
    """Integer window centers k whose unit window meets the grid's frequencies."""
    xi = grid.frequencies()
    return np.arange(int(np.floor(xi.min())), int(np.floor(xi.max())) + 2)


_WINDOW_CACHE: dict[tuple, np.ndarray] = {}


def wiener_window_weights(grid: Grid1D) -> np.ndarray:
    """Rows psi(xi - k) of the flat unit-window partition over the grid
    frequencies, one row per index from wiener_window_indices.

    Cached per uniform grid signature: the matrix only depends on the
    frequency lattice.
    """
    key = (grid.geometry, grid.n, grid.period)
    cached = _WINDOW_CACHE.get(key)
    if cached is None:
        xi = grid.frequencies()
        ks = wiener_window_indices(grid)
        cached = np.stack([flat_window(xi - k) for k in ks])
        cached.flags.writeable = False
        _WINDOW_CACHE[key] = cached
    return cached


def _line_multiplier(grid: Grid1D, rng, distribution) -> np.ndarray:
    g = draws(rng, wiener_window_indices(grid).size, distribution)
    return g @ wiener_window_weights(grid)


def _torus_multiplier(grid: Grid1D, rng, distribution) -> np.ndarray:
    return draws(rng, grid.n, distribution)


def wiener_randomize_line(
    f: WaveFunction, rng: np.random.Generator, distribution: str = GAUSSIAN
) -> WaveFunction:
    """Multiply each unit frequency window psi(xi - k) fhat by an independent
    draw g_k and transform back."""
    if f.grid.geometry != GEOMETRY_LINE:
        raise ValueError("Wiener randomization applies to line grids")
    mult = _line_multiplier(f.grid, rng, distribution)
    return WaveFunction(f.grid, np.fft.ifft(spectrum(f) * mult))


def fourier_randomize_torus(
    f: WaveFunction, rng: np.random.Generator, distribution: str = GAUSSIAN
) -> WaveFunction:
    """Independent draw per Fourier mode on the torus."""
    if f.grid.geometry != GEOMETRY_TORUS:
        raise ValueError("Fourier randomization applies to torus grids")
    mult = _torus_multiplier(f.grid, rng, distribution)
    return WaveFunction(f.grid, np.fft.ifft(spectrum(f) * mult))


def ball_randomize(
    grid: Grid1D, coeffs, rng: np.random.Generator, distribution: str = GAUSSIAN
) -> WaveFunction:
    """Eigenbasis randomization on the ball: coefficients g_m * c_m / (m pi);
    the 1/(m pi) damping is part of the definition."""
    if grid.geometry != GEOMETRY_BALL:
        raise ValueError("ball randomization applies to ball-radial grids")
    c = np.asarray(coeffs, dtype=complex)
    m = np.arange(1, c.size + 1)
    g = draws(rng, c.size, distribution)
    return ball_wavefunction(grid, g * c / (m * math.pi))


# ---------------------------------------------------------------------------
# full randomization of a compact operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RandomizedOperator:
    """One draw of the fully randomized operator: eigenvalue signs/sizes from
    g2, frequency-block randomized eigenfunctions sharing a single omega draw."""

    base: CompactOperatorRep
    g2_draws: np.ndarray
    randomized_functions: tuple[WaveFunction, ...]

    def __post_init__(self):
        if len(self.randomized_functions) != self.base.rank or self.g2_draws.size != self.base.rank:
            raise ValueError("one draw and one randomized function per eigenvalue required")


def randomize_operator(
    op: CompactOperatorRep,
    rngs: tuple[np.random.Generator, np.random.Generator],
    distribution: str = GAUSSIAN,
) -> RandomizedOperator:
    """Draw g2 per eigenvalue and one shared frequency multiplier applied to
    every eigenfunction (the block draws are indexed by frequency, not by j)."""
    rng_omega, rng_eigen = rngs
    g2 = draws(rng_eigen, op.rank, distribution)
    grid = op.grid
    if grid.geometry == GEOMETRY_BALL:
        funcs = []
        g1 = None
        for f in op.system.functions:
            if f.coeffs is None:
                raise ValueError("ball randomization requires eigenbasis coefficients")
            if g1 is None:
                g1 = draws(rng_omega, f.coeffs.size, distribution)
            m = np.arange(1, f.coeffs.size + 1)
            funcs.append(ball_wavefunction(grid, g1 * f.coeffs / (m * math.pi)))
    else:
        mult = (
            _line_multiplier(grid, rng_omega, distribution)
            if grid.geometry == GEOMETRY_LINE
            else _torus_multiplier(grid, rng_omega, distribution)
        )
        funcs = [
            WaveFunction(grid, np.fft.ifft(spectrum(f) * mult)) for f in op.system.functions
        ]
    return RandomizedOperator(op, np.asarray(g2, dtype=float), tuple(funcs))


def randomized_density(rop: RandomizedOperator, t: float) -> DensityField:
    """Density sum_j lambda_j g2_j |U(t) f_j^omega|^2 of one randomization draw."""
    grid = rop.base.grid
    weights = rop.base.eigenvalues * rop.g2_draws
    rho = np.zeros(grid.n)
    for w, f in zip(weights, rop.randomized_functions):
        u = _propagate_values(f, t)
        rho += w * np.abs(u) ** 2
    return DensityField(grid, t, rho)


def _propagate_values(f: WaveFunction, t: float) -> np.ndarray:
    if f.grid.geometry == GEOMETRY_BALL:
        return propagate(f, t).values
    phase = np.exp(1j * t * boussinesq_symbol(f.grid.frequencies()))
    return np.fft.ifft(spectrum(f) * phase)


# ---------------------------------------------------------------------------
# Monte-Carlo experiments
# ---------------------------------------------------------------------------


def khinchin_ratio(
    a,
    r: float,
    n_samples: int,
    rng: np.random.Generator,
    distribution: str = GAUSSIAN,
) -> float:
    """Monte-Carlo estimate of (E|sum_k a_k g_k|^r)^(1/r) / ||a||_2."""
    if r < 2:
        raise ValueError("Khinchin ratios are probed for r >= 2")
    a = np.asarray(a, dtype=float)
    g = draws(rng, (n_samples, a.size), distribution)
    sums = g @ a
    return float(np.mean(np.abs(sums) ** r) ** (1.0 / r) / np.linalg.norm(a))


@dataclass(frozen=True)
class StochasticContinuityTable:
    """Per-time Monte-Carlo L^r norms of the density fluctuation
    F(t) = sum_j lambda_j g2_j (|f_j^omega|^2 - |U(t) f_j^omega|^2),
    at the fixed point of maximal base density and in spatial L^2."""

    t: np.ndarray
    point_norm: np.ndarray
    l2_norm: np.ndarray
    x0: float
    r: float
    n_samples: int
    seeds: RandomSeedPair

    def rows(self):
        return list(zip(self.t.tolist(), self.point_norm.tolist(), self.l2_norm.tolist()))


def stochastic_continuity_experiment(
    op: CompactOperatorRep,
    t_list,
    r: float,
    n_samples: int,
    seeds: RandomSeedPair,
    distribution: str = GAUSSIAN,
) -> StochasticContinuityTable:
    """Estimate (E|F(t)|^r)^(1/r) on a decreasing time list.

    The same sample draws are reused for every t, so the table is smooth in t;
    the t = 0 entries are exactly zero because the propagator is then the
    identity.
    """
    if r < 2:
        raise ValueError("stochastic continuity is stated for r in [2, infinity)")
    grid = op.grid
    t_arr = np.asarray(list(t_list), dtype=float)
    base_density = density_function(op, 0.0)
    x0_idx = int(np.argmax(np.abs(base_density.values)))
    x0 = float(grid.points[x0_idx])
    meas = grid.cell_measure

    acc_point = np.zeros(t_arr.size)
    acc_l2 = np.zeros(t_arr.size)
    rng_omega, rng_eigen = seeds.rngs()
    for _ in range(n_samples):
        rop = randomize_operator(op, (rng_omega, rng_eigen), distribution)
        weights = rop.base.eigenvalues * rop.g2_draws
        if grid.geometry == GEOMETRY_BALL:
            coeff_mat = np.stack([f.coeffs for f in rop.randomized_functions])
            basis = ball_basis(grid, coeff_mat.shape[1])
            base_vals = coeff_mat @ basis.T
            m = np.arange(1, coeff_mat.shape[1] + 1)
            phases = np.exp(1j * np.outer(t_arr, ball_phase(m)))
        else:
            spectra = np.stack([spectrum(f) for f in rop.randomized_functions])
            base_vals = np.fft.ifft(spectra, axis=1)
            phi = boussinesq_symbol(grid.frequencies())
            phases = np.exp(1j * np.outer(t_arr, phi))
        base_sq = np.abs(base_vals) ** 2
        for i, t in enumerate(t_arr):
            if t == 0.0:
                continue
            if grid.geometry == GEOMETRY_BALL:
                prop_vals = (coeff_mat * phases[i]) @ basis.T
            else:
                prop_vals = np.fft.ifft(spectra * phases[i], axis=1)
            fluct = np.einsum("j,jx->x", weights, base_sq - np.abs(prop_vals) ** 2)
            acc_point[i] += abs(fluct[x0_idx]) ** r
            acc_l2[i] += math.sqrt(np.sum(fluct**2 * meas)) ** r
    point = (acc_point / n_samples) ** (1.0 / r)
    l2 = (acc_l2 / n_samples) ** (1.0 / r)
    return StochasticContinuityTable(t_arr, point, l2, x0, r, n_samples, seeds)
