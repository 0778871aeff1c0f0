"""Verification experiments for the dispersive estimates.

Each experiment reduces to one statistic: a fitted log-log scaling exponent,
a normalized bound ratio, or a convergence table.  Claimed exponents come in
through the configuration; every ratio is invariant under rescaling the
eigenvalue sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import Grid1D, TimeGrid, torus_grid, uniform_time_grid
from .norms import (
    SPACE_OUTER,
    TIME_OUTER,
    SpaceTimeField,
    conjugate_exponent,
    lorentz_weak_norm,
    mixed_norm,
    sequence_norm,
)
from .randomization import RandomSeedPair
from .spectral import (
    HomSobolev,
    L2,
    CompactOperatorRep,
    OrthonormalSystem,
    WaveFunction,
    boussinesq_symbol,
    density_function,
    fourier_mode,
    homogeneous_sobolev_lift,
    propagated_values,
    random_band_limited_system,
)

TWO_PI = 2.0 * math.pi

#: slope tolerance used by the scaling criteria (dyadic N, log-range >= 4 ln 2)
SLOPE_TOL = 0.05


# ---------------------------------------------------------------------------
# exponent bookkeeping
# ---------------------------------------------------------------------------


def exponent_violations(p: float, q: float, beta: float | None = None) -> list[str]:
    """Admissibility of (p, q, beta) for the truncated Strichartz bound:
    (1/q, 1/p) on the open segment from (0, 1/2) to (1, 0], equivalently
    2/p + 1/q = 1 with 0 < 1/q <= 1, and beta <= 2q/(q+1)."""
    out = []
    if q < 1:
        out.append(f"q must be >= 1 (got {q})")
        return out
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if inv_q <= 0.0:
        out.append("endpoint A=(0,1/2) is excluded: 1/q must be positive")
    elif abs(2.0 * inv_p + inv_q - 1.0) > 1e-9:
        out.append(f"2/p + 1/q = 1 violated: got {2.0 * inv_p + inv_q:.6f}")
    if beta is not None and inv_q > 0.0:
        limit = 2.0 * q / (q + 1.0)
        if beta > limit + 1e-12:
            out.append(f"beta exceeds 2q/(q+1)={limit:.6g} (got {beta})")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Shared experiment knobs: geometry, exponents, dyadic N list, grid
    densities, rank, seed pair and the system construction recipe."""

    geometry: str = "torus"
    p: float = 4.0
    q: float = 2.0
    beta: float = 4.0 / 3.0
    n_values: tuple = (64, 128, 256, 512, 1024)
    n_t: int = 32
    rank: int = 8
    systems_per_n: int = 1
    recipe: str = "generic"  # or "counterexample"
    seeds: RandomSeedPair = field(default_factory=lambda: RandomSeedPair(7, 11))

    def violations(self) -> list[str]:
        out = []
        if any(n < 1 for n in self.n_values):
            out.append("N must be >= 1")
        if len(self.n_values) >= 1 and len(self.n_values) < 3:
            out.append("scaling fits need >= 3 dyadic N values")
        if self.rank < 1:
            out.append("rank must be >= 1")
        if self.recipe not in ("generic", "counterexample"):
            out.append(f"unknown recipe {self.recipe!r}")
        out.extend(exponent_violations(self.p, self.q, self.beta))
        return out


@dataclass(frozen=True)
class ScalingFit:
    """Log-log least-squares fit of measured norms against N."""

    n_values: tuple
    values: tuple
    slope: float
    residual: float
    claimed_exponent: float

    def matches_claim(self, tol: float = SLOPE_TOL) -> bool:
        return abs(self.slope - self.claimed_exponent) <= tol


def fit_exponent(pairs) -> tuple[float, float]:
    """Least squares on (log N, log value); residual is the max absolute
    log deviation from the fitted line."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ValueError("need at least 3 points to fit an exponent")
    n = np.array([float(a) for a, _ in pairs])
    v = np.array([float(b) for _, b in pairs])
    if np.any(v <= 0.0):
        raise ValueError("nonpositive values cannot be fit on a log scale")
    slope, intercept = np.polyfit(np.log(n), np.log(v), 1)
    resid = np.max(np.abs(np.log(v) - (slope * np.log(n) + intercept)))
    return float(slope), float(resid)


def _make_fit(n_values, values, claimed) -> ScalingFit:
    if all(v == 0.0 for v in values):
        raise ValueError("degenerate data: all norms vanish")
    slope, resid = fit_exponent(zip(n_values, values))
    return ScalingFit(tuple(n_values), tuple(float(v) for v in values), slope, resid, claimed)


# ---------------------------------------------------------------------------
# density fields over space-time grids
# ---------------------------------------------------------------------------


def counterexample_grid(n_max: int) -> Grid1D:
    """Torus grid resolving the density of the mode-range counterexample."""
    n = 256
    while n < 4 * n_max:
        n *= 2
    return torus_grid(n)


def truncated_density_spacetime(
    functions, lam, grid: Grid1D, tgrid: TimeGrid, n_max: int
) -> SpaceTimeField:
    """Density sum_j lam_j |D_N f_j|^2 over a time grid, batched over rank."""
    lam = np.asarray(lam, dtype=float)
    vals = np.stack([f.values for f in functions])
    spectra = np.fft.fft(vals, axis=1)
    k = grid.frequencies()
    if 2 * n_max > grid.n:
        raise ValueError(f"mode cutoff {n_max} beyond Nyquist limit {grid.n // 2}")
    spectra = spectra * (np.abs(k) <= n_max) / TWO_PI
    phi = boussinesq_symbol(k)
    rho = np.empty((tgrid.n, grid.n))
    for i, t in enumerate(tgrid.points):
        u = np.fft.ifft(spectra * np.exp(1j * t * phi), axis=1)
        rho[i] = np.einsum("j,jx->x", lam, np.abs(u) ** 2)
    return SpaceTimeField(tgrid, grid, rho)


def density_spacetime(op: CompactOperatorRep, tgrid: TimeGrid) -> SpaceTimeField:
    """Density of the full (untruncated) propagator evolution over a time grid."""
    rho = np.empty((tgrid.n, op.grid.n))
    for i, t in enumerate(tgrid.points):
        u = propagated_values(op.system, float(t))
        rho[i] = np.einsum("j,jx->x", op.eigenvalues, np.abs(u) ** 2)
    return SpaceTimeField(tgrid, op.grid, rho)


def _generic_system(grid: Grid1D, rank: int, n_max: int, rng) -> tuple[OrthonormalSystem, np.ndarray]:
    system = random_band_limited_system(grid, rank, n_max, rng, L2())
    lam = rng.uniform(0.2, 1.0, rank)
    return system, lam


def _counterexample_functions(grid: Grid1D, n_max: int) -> tuple[list[WaveFunction], np.ndarray]:
    """The extremal family e^{ijx}, |j| <= N, with flat eigenvalues 1/(2 pi)."""
    funcs = [fourier_mode(grid, j, normalized=False) for j in range(-n_max, n_max + 1)]
    lam = np.full(2 * n_max + 1, 1.0 / TWO_PI)
    return funcs, lam


# ---------------------------------------------------------------------------
# Strichartz scaling and optimality
# ---------------------------------------------------------------------------


def strichartz_scaling_torus(cfg: ExperimentConfig) -> ScalingFit:
    """Fit the L^p_t L^q_x norm of the truncated density against N.

    Generic random systems should stay at or below the claimed N^(1/p) rate;
    the counterexample recipe yields slope 1.
    """
    bad = cfg.violations()
    if bad:
        raise ValueError("; ".join(bad))
    rng = np.random.Generator(np.random.Philox(cfg.seeds.seed_omega))
    norms = []
    for n_max in cfg.n_values:
        grid = counterexample_grid(n_max)
        tgrid = uniform_time_grid(0.0, TWO_PI, cfg.n_t)
        if cfg.recipe == "counterexample":
            funcs, lam = _counterexample_functions(grid, n_max)
        else:
            system, lam = _generic_system(grid, cfg.rank, n_max, rng)
            funcs = system.functions
        field_ = truncated_density_spacetime(funcs, lam, grid, tgrid, n_max)
        norms.append(mixed_norm(field_, cfg.p, cfg.q, TIME_OUTER))
    claimed = 1.0 if cfg.recipe == "counterexample" else (0.0 if math.isinf(cfg.p) else 1.0 / cfg.p)
    return _make_fit(cfg.n_values, norms, claimed)


@dataclass(frozen=True)
class CounterexampleRecord:
    n_max: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def optimality_counterexample(
    n_max: int, p: float, q: float, beta: float, n_t: int = 32, maximal: bool = False
) -> CounterexampleRecord:
    """One data point of the optimality argument: LHS norm of the extremal
    density against N^(1/p) ||lambda||_beta (or N^(1/2) for the maximal-in-space
    case)."""
    grid = counterexample_grid(n_max)
    tgrid = uniform_time_grid(0.0, TWO_PI, n_t)
    funcs, lam = _counterexample_functions(grid, n_max)
    field_ = truncated_density_spacetime(funcs, lam, grid, tgrid, n_max)
    if maximal:
        lhs = mixed_norm(field_, 2.0, math.inf, TIME_OUTER)
        rate = math.sqrt(n_max)
    else:
        lhs = mixed_norm(field_, p, q, TIME_OUTER)
        rate = n_max ** (1.0 / p) if not math.isinf(p) else 1.0
    rhs = rate * sequence_norm(lam, beta)
    return CounterexampleRecord(n_max, lhs, rhs)


def counterexample_sweep(
    n_values, p: float, q: float, beta: float, n_t: int = 32, maximal: bool = False
) -> tuple[ScalingFit, ScalingFit]:
    """Dyadic sweep of the counterexample: fitted LHS exponent (claim: 1) and
    fitted LHS/RHS ratio exponent (claim: 1 - 1/p - 1/beta, with 1/p read as
    1/2 in the maximal-in-space case)."""
    records = [optimality_counterexample(n, p, q, beta, n_t, maximal) for n in n_values]
    lhs_fit = _make_fit(n_values, [r.lhs for r in records], 1.0)
    inv_p = 0.5 if maximal else (0.0 if math.isinf(p) else 1.0 / p)
    ratio_claim = 1.0 - inv_p - 1.0 / beta
    ratio_fit = _make_fit(n_values, [r.ratio for r in records], ratio_claim)
    return lhs_fit, ratio_fit


def strichartz_ratio_table(cfg: ExperimentConfig) -> list[tuple[int, int, float]]:
    """Normalized ratios LHS / (N^(1/p) ||lambda||_beta) for a batch of random
    systems per N; rows (N, sample index, ratio)."""
    bad = cfg.violations()
    if bad:
        raise ValueError("; ".join(bad))
    rng = np.random.Generator(np.random.Philox(cfg.seeds.seed_omega))
    rows = []
    for n_max in cfg.n_values:
        grid = counterexample_grid(n_max)
        tgrid = uniform_time_grid(0.0, TWO_PI, cfg.n_t)
        rate = 1.0 if math.isinf(cfg.p) else n_max ** (1.0 / cfg.p)
        for s in range(cfg.systems_per_n):
            system, lam = _generic_system(grid, cfg.rank, n_max, rng)
            field_ = truncated_density_spacetime(system.functions, lam, grid, tgrid, n_max)
            lhs = mixed_norm(field_, cfg.p, cfg.q, TIME_OUTER)
            rows.append((n_max, s, lhs / (rate * sequence_norm(lam, cfg.beta))))
    return rows


def maximal_space_scaling(
    n_values,
    beta: float,
    recipe: str = "counterexample",
    rank: int = 8,
    n_t: int = 32,
    seeds: RandomSeedPair = RandomSeedPair(7, 11),
    bound_mode: bool = True,
) -> ScalingFit:
    """L^2_t L^infinity_x norm of the truncated density against N.

    ``bound_mode`` rejects beta > 2 (the claimed bound's region); pass
    bound_mode=False to exhibit the failure beyond it.
    """
    if bound_mode and beta > 2.0:
        raise ValueError(f"beta <= 2 required for the maximal-in-space bound (got {beta})")
    rng = np.random.Generator(np.random.Philox(seeds.seed_omega))
    norms = []
    for n_max in n_values:
        grid = counterexample_grid(n_max)
        tgrid = uniform_time_grid(0.0, TWO_PI, n_t)
        if recipe == "counterexample":
            funcs, lam = _counterexample_functions(grid, n_max)
        else:
            system, lam = _generic_system(grid, rank, n_max, rng)
            funcs = system.functions
        field_ = truncated_density_spacetime(funcs, lam, grid, tgrid, n_max)
        norms.append(mixed_norm(field_, 2.0, math.inf, TIME_OUTER))
    claimed = 1.0 if recipe == "counterexample" else 0.5
    return _make_fit(n_values, norms, claimed)


# ---------------------------------------------------------------------------
# maximal-in-time ratio and pointwise convergence
# ---------------------------------------------------------------------------


def sobolev_quarter_system(
    grid: Grid1D, rank: int, max_mode: int, rng
) -> OrthonormalSystem:
    """Hdot^(1/4)-orthonormal system: homogeneous lift of a mean-zero
    L2-orthonormal random band-limited family."""
    base = random_band_limited_system(grid, rank, max_mode, rng, L2(), mean_zero=True)
    lifted = tuple(homogeneous_sobolev_lift(f, 0.25) for f in base.functions)
    return OrthonormalSystem(lifted, HomSobolev(0.25))


def maximal_in_time_ratio(
    op: CompactOperatorRep,
    beta: float,
    interval: tuple[float, float] = (0.0, 1.0),
    t_samples: int = 64,
    bound_mode: bool = True,
) -> float:
    """Weak-L^2_x norm of sup_t density over the interval, divided by
    ||lambda||_beta; the time sup is the max over the sampled grid."""
    if bound_mode and beta >= 2.0:
        raise ValueError(f"beta < 2 required for the maximal-in-time bound (got {beta})")
    if not isinstance(op.system.kind, HomSobolev) or abs(op.system.kind.s - 0.25) > 1e-12:
        raise ValueError("maximal-in-time ratio expects an Hdot^(1/4)-orthonormal system")
    tgrid = uniform_time_grid(interval[0], interval[1], t_samples)
    field_ = density_spacetime(op, tgrid)
    sup_t = np.max(np.abs(field_.values), axis=0)
    lhs = lorentz_weak_norm(sup_t, 2.0, grid=op.grid)
    return lhs / sequence_norm(op.eigenvalues, beta)


@dataclass(frozen=True)
class ConvergenceTable:
    t: np.ndarray
    sup_deviation: np.ndarray

    def rows(self):
        return list(zip(self.t.tolist(), self.sup_deviation.tolist()))


def pointwise_convergence_scan(op: CompactOperatorRep, t_list) -> ConvergenceTable:
    """sup_x |rho_t(x) - rho_0(x)| on a decreasing time list; exactly zero at
    t = 0 and linear in t for band-limited systems."""
    t_arr = np.asarray(list(t_list), dtype=float)
    rho0 = density_function(op, 0.0).values
    devs = np.empty(t_arr.size)
    for i, t in enumerate(t_arr):
        if t == 0.0:
            devs[i] = 0.0
            continue
        devs[i] = float(np.max(np.abs(density_function(op, float(t)).values - rho0)))
    return ConvergenceTable(t_arr, devs)


# ---------------------------------------------------------------------------
# duality consistency
# ---------------------------------------------------------------------------


def truncated_propagator_matrix(grid: Grid1D, tgrid: TimeGrid, n_max: int) -> np.ndarray:
    """Dense matrix of D_N as a map from L^2 of the torus into space-time,
    shaped (n_t * n_x, n_x), kernel convention: (Af)(t,x) = sum_y A[tx, y] f(y) w_y."""
    if 2 * n_max > grid.n:
        raise ValueError(f"mode cutoff {n_max} beyond Nyquist limit {grid.n // 2}")
    k = np.arange(-n_max, n_max + 1)
    phases = np.exp(1j * np.outer(tgrid.points, boussinesq_symbol(k)))
    modes_x = np.exp(1j * np.outer(grid.points, k))
    # E[(t,x), k] = e^{i(kx + t phi(k))} / (2 pi)^2
    e_mat = (phases[:, None, :] * modes_x[None, :, :]).reshape(-1, k.size) / TWO_PI**2
    return e_mat @ np.exp(-1j * np.outer(k, grid.points))


def weighted_schatten(big: np.ndarray, w_rows, w_cols, alpha: float) -> float:
    root_r = np.sqrt(np.asarray(w_rows, dtype=float))
    root_c = np.sqrt(np.asarray(w_cols, dtype=float))
    sv = np.linalg.svd(root_r[:, None] * big * root_c[None, :], compute_uv=False)
    return sequence_norm(sv, alpha)


def dual_schatten_ratio(
    w_field: SpaceTimeField, a_matrix: np.ndarray, p: float, q: float, beta: float
) -> float:
    """||W A A* conj(W)||_{S^beta'} / ||W||^2_{L^{2p'}_t L^{2q'}_x}, computed
    through the singular values of the weighted map W A (same nonzero
    spectrum, at quadratic power)."""
    pp, qq = 2.0 * conjugate_exponent(p), 2.0 * conjugate_exponent(q)
    w_norm = mixed_norm(w_field, pp, qq, TIME_OUTER)
    if w_norm == 0.0:
        return 0.0
    w_st = np.repeat(w_field.tgrid.dt, w_field.tgrid.n)
    w_st = (w_st[:, None] * w_field.xgrid.cell_measure[None, :]).ravel()
    b_mat = w_field.values.ravel()[:, None] * a_matrix
    root_r = np.sqrt(w_st)
    root_c = np.sqrt(w_field.xgrid.cell_measure)
    sv = np.linalg.svd(root_r[:, None] * b_mat * root_c[None, :], compute_uv=False)
    beta_conj = conjugate_exponent(beta)
    return sequence_norm(sv**2, beta_conj) / w_norm**2


def optimal_witness(field_: SpaceTimeField, p: float, q: float) -> SpaceTimeField:
    """The nonnegative W with |W|^2 realizing equality in the iterated Hoelder
    pairing <G, |W|^2> = ||G||_{L^p L^q} ||W^2||_{L^{p'} L^{q'}}."""
    if math.isinf(p) or math.isinf(q):
        raise ValueError("optimal witnesses are built for finite exponents")
    g = np.abs(field_.values)
    inner = np.sum(g**q * field_.xgrid.cell_measure[None, :], axis=1) ** (1.0 / q)
    h = inner[:, None] ** (p - q) * g ** (q - 1.0)
    return SpaceTimeField(field_.tgrid, field_.xgrid, np.sqrt(h))


@dataclass(frozen=True)
class DualityRecord:
    primal: float
    dual: float
    witness_dual: float
    pairing_gap: float

    def holds(self, dual_constant: float) -> bool:
        return self.primal <= dual_constant * (1.0 + 1e-6)


@dataclass(frozen=True)
class DualityBatchResult:
    records: tuple[DualityRecord, ...]
    dual_constant: float
    holds: bool


def duality_consistency_check(
    w_field: SpaceTimeField,
    system: OrthonormalSystem,
    lam,
    p: float,
    q: float,
    beta: float,
    n_max: int,
    a_matrix: np.ndarray | None = None,
) -> DualityRecord:
    """One primal/dual sample of the finite-rank duality principle.

    primal: ||sum lam_j |D_N f_j|^2||_{L^p L^q} / ||lambda||_beta.
    dual: the Schatten ratio of the supplied W; witness_dual: the ratio of the
    optimal factorization witness of this sample's density.  pairing_gap
    measures how exactly the witness pairing reproduces the primal norm.
    """
    grid, tgrid = w_field.xgrid, w_field.tgrid
    if a_matrix is None:
        a_matrix = truncated_propagator_matrix(grid, tgrid, n_max)
    lam = np.asarray(lam, dtype=float)
    field_ = truncated_density_spacetime(system.functions, lam, grid, tgrid, n_max)
    primal_norm = mixed_norm(field_, p, q, TIME_OUTER)
    primal = primal_norm / sequence_norm(lam, beta)
    dual = dual_schatten_ratio(w_field, a_matrix, p, q, beta)
    witness = optimal_witness(field_, p, q)
    witness_dual = dual_schatten_ratio(witness, a_matrix, p, q, beta)
    # pairing <G, W^2> / ||W^2||_{p', q'} should equal ||G||_{p, q} exactly
    h_vals = witness.values**2
    pair = float(
        np.sum(
            field_.values
            * h_vals
            * tgrid.dt
            * grid.cell_measure[None, :]
        )
    )
    h_field = SpaceTimeField(tgrid, grid, h_vals)
    h_norm = mixed_norm(h_field, conjugate_exponent(p), conjugate_exponent(q), TIME_OUTER)
    gap = abs(pair / h_norm - primal_norm) / primal_norm if primal_norm > 0 else 0.0
    return DualityRecord(primal, dual, witness_dual, gap)


def duality_batch(
    batch: int,
    p: float,
    q: float,
    beta: float,
    n_max: int = 16,
    n_x: int = 64,
    n_t: int = 64,
    rank: int = 4,
    seeds: RandomSeedPair = RandomSeedPair(7, 11),
) -> DualityBatchResult:
    """Batch of random (W, system, lambda) triples: the check holds when every
    primal ratio is dominated by the batch dual constant (random W's plus the
    optimal witnesses), up to 1e-6 slack."""
    grid = torus_grid(n_x)
    tgrid = uniform_time_grid(0.0, TWO_PI, n_t)
    a_matrix = truncated_propagator_matrix(grid, tgrid, n_max)
    rng = np.random.Generator(np.random.Philox(seeds.seed_omega))
    records = []
    for _ in range(batch):
        w_vals = np.abs(rng.standard_normal((n_t, n_x))) + 0.1
        w_field = SpaceTimeField(tgrid, grid, w_vals)
        system, _ = _generic_system(grid, rank, n_max, rng)
        lam = rng.uniform(0.2, 1.0, rank)
        records.append(
            duality_consistency_check(w_field, system, lam, p, q, beta, n_max, a_matrix)
        )
    dual_constant = max(max(r.dual, r.witness_dual) for r in records)
    holds = all(r.holds(dual_constant) for r in records)
    return DualityBatchResult(tuple(records), dual_constant, holds)
