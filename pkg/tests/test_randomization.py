import math

import numpy as np
import pytest

from bqlab.grids import ball_grid, line_grid, torus_grid
from bqlab.randomization import (
    GAUSSIAN,
    RADEMACHER,
    RandomSeedPair,
    ball_randomize,
    draws,
    fourier_randomize_torus,
    gaussian_abs_moment,
    khinchin_ratio,
    randomize_operator,
    randomized_density,
    stochastic_continuity_experiment,
    wiener_randomize_line,
    wiener_window_indices,
    wiener_window_weights,
)
from bqlab.spectral import (
    L2,
    CompactOperatorRep,
    OrthonormalSystem,
    WaveFunction,
    ball_basis,
    ball_wavefunction,
    fourier_mode,
    line_mode,
    random_ball_system,
    random_band_limited_system,
    spectrum,
)

TWO_PI = 2.0 * math.pi


class OnesRng:
    """Degenerate stand-in: every draw equals one."""

    def standard_normal(self, size=None):
        return np.ones(size) if size is not None else 1.0

    def integers(self, lo, hi, size=None):
        return np.ones(size, dtype=int)


# ---------------------------------------------------------------------------
# draw distributions
# ---------------------------------------------------------------------------


def test_draw_distributions(rng):
    g = draws(rng, 1000, GAUSSIAN)
    r = draws(rng, 1000, RADEMACHER)
    assert np.all(np.isin(r, (-1.0, 1.0)))
    assert abs(np.mean(g)) <= 0.15
    with pytest.raises(ValueError):
        draws(rng, 4, "cauchy")


def test_gaussian_moment_generating_bound(rng):
    # E e^{gamma g} = e^{gamma^2 / 2}: the sub-Gaussian bound with c = 1/2,
    # exact analytically, sampled at three gamma values
    n = 200_000
    g = rng.standard_normal(n)
    for gamma in (0.25, 0.5, 1.0):
        empirical = float(np.mean(np.exp(gamma * g)))
        assert math.isclose(empirical, math.exp(gamma**2 / 2.0), rel_tol=0.05)


def test_gaussian_abs_moment_formula():
    assert math.isclose(gaussian_abs_moment(2.0), 1.0, rel_tol=1e-12)
    assert math.isclose(gaussian_abs_moment(4.0), 3.0, rel_tol=1e-12)
    assert math.isclose(gaussian_abs_moment(3.0), 2.0 * math.sqrt(2.0 / math.pi), rel_tol=1e-12)


# ---------------------------------------------------------------------------
# the three randomizations
# ---------------------------------------------------------------------------


def test_wiener_zero_input(line1024, rng):
    z = WaveFunction(line1024, np.zeros(line1024.n, dtype=complex))
    assert np.all(wiener_randomize_line(z, rng).values == 0.0)


def test_wiener_single_block(line1024, rng):
    # a mode at an exactly integer frequency sits at the peak of one unit
    # window, so the randomization is a single shared draw times f
    f = line_mode(line1024, 32)  # xi = 2 pi 32 / (64 pi) = 1
    out = wiener_randomize_line(f, rng)
    ratio = out.values / f.values
    assert np.max(np.abs(ratio - ratio[0])) <= 1e-10
    assert abs(ratio[0].imag) <= 1e-12


def test_wiener_variance_oracle(line1024):
    # E|f^omega(x0)|^2 = sum_k |(psi(D-k) f)(x0)|^2
    maker = np.random.Generator(np.random.Philox(2))
    f = random_band_limited_system(line1024, 1, 20, maker).functions[0]
    x0 = 101
    fhat = spectrum(f)
    blocks = np.fft.ifft(wiener_window_weights(line1024) * fhat[None, :], axis=1)
    oracle = float(np.sum(np.abs(blocks[:, x0]) ** 2))
    rng = np.random.Generator(np.random.Philox(3))
    n_mc = 10_000
    acc = 0.0
    for _ in range(n_mc):
        acc += abs(wiener_randomize_line(f, rng).values[x0]) ** 2
    assert math.isclose(acc / n_mc, oracle, rel_tol=0.05)


def test_wiener_windows_cover_grid(line1024):
    ks = wiener_window_indices(line1024)
    w = wiener_window_weights(line1024)
    assert w.shape == (ks.size, line1024.n)
    assert np.max(np.abs(np.sum(w, axis=0) - 1.0)) <= 1e-12


def test_fourier_randomize_single_mode(torus256, rng):
    f = fourier_mode(torus256, 3)
    out = fourier_randomize_torus(f, rng)
    ratio = out.values / f.values
    assert np.max(np.abs(ratio - ratio[0])) <= 1e-10


def test_fourier_randomize_variance(torus256):
    maker = np.random.Generator(np.random.Philox(4))
    f = random_band_limited_system(torus256, 1, 12, maker).functions[0]
    rng = np.random.Generator(np.random.Philox(5))
    n_mc = 5000
    acc = 0.0
    dx = torus256.cell_measure
    for _ in range(n_mc):
        vals = fourier_randomize_torus(f, rng).values
        acc += float(np.sum(np.abs(vals) ** 2 * dx))
    assert math.isclose(acc / n_mc, 1.0, rel_tol=0.05)


def test_ball_randomize_zero_and_single_mode(ball128, rng):
    z = ball_randomize(ball128, np.zeros(6), rng)
    assert np.all(z.values == 0.0)
    c = np.zeros(6, dtype=complex)
    c[2] = 2.0  # mode m0 = 3
    out = ball_randomize(ball128, c, OnesRng())
    expected = ball_wavefunction(ball128, c / (3.0 * math.pi))
    assert np.max(np.abs(out.values - expected.values)) <= 1e-12


def test_ball_randomize_variance(ball128):
    c = np.array([1.0, 0.5, 0.0, 0.25])
    m = np.arange(1, 5)
    oracle = float(np.sum(np.abs(c / (m * math.pi)) ** 2))
    rng = np.random.Generator(np.random.Philox(6))
    acc = 0.0
    n_mc = 5000
    for _ in range(n_mc):
        acc += float(np.linalg.norm(ball_randomize(ball128, c, rng).coeffs) ** 2)
    assert math.isclose(acc / n_mc, oracle, rel_tol=0.05)


def test_randomization_linearity_under_shared_draws(line1024):
    maker = np.random.Generator(np.random.Philox(7))
    sys2 = random_band_limited_system(line1024, 2, 20, maker)
    f, h = sys2.functions
    alpha, beta = 1.3, -0.7 + 0.2j
    combo = WaveFunction(line1024, alpha * f.values + beta * h.values)
    seed = 77
    out_combo = wiener_randomize_line(combo, np.random.Generator(np.random.Philox(seed)))
    out_f = wiener_randomize_line(f, np.random.Generator(np.random.Philox(seed)))
    out_h = wiener_randomize_line(h, np.random.Generator(np.random.Philox(seed)))
    assert np.max(np.abs(out_combo.values - alpha * out_f.values - beta * out_h.values)) <= 1e-10


# ---------------------------------------------------------------------------
# full operator randomization
# ---------------------------------------------------------------------------


def _torus_operator(rng, rank=3, lam=None):
    system = random_band_limited_system(torus_grid(128), rank, 10, rng)
    lam = np.array([1.0, -0.5, 0.25])[:rank] if lam is None else lam
    return CompactOperatorRep(lam, system)


def test_randomize_operator_degenerate_draws(rng):
    op = _torus_operator(rng)
    rop = randomize_operator(op, (OnesRng(), OnesRng()))
    rho = randomized_density(rop, 0.0)
    direct = sum(
        lam * np.abs(f.values) ** 2
        for lam, f in zip(op.eigenvalues, rop.randomized_functions)
    )
    assert np.max(np.abs(rho.values - direct)) <= 1e-12


def test_randomize_operator_zero_rank_density(rng):
    op = _torus_operator(rng, lam=np.zeros(3))
    rop = randomize_operator(op, RandomSeedPair(1, 2).rngs())
    assert np.all(randomized_density(rop, 0.3).values == 0.0)


def test_randomized_trace_zero_mean(rng):
    # E integral of the randomized density vanishes (zero-mean g2)
    op = _torus_operator(rng)
    rng_pair = RandomSeedPair(11, 12).rngs()
    n_mc = 4000
    samples = np.empty(n_mc)
    for i in range(n_mc):
        rop = randomize_operator(op, rng_pair)
        samples[i] = randomized_density(rop, 0.0).integral()
    mean = float(np.mean(samples))
    tol = 3.0 * float(np.std(samples)) / math.sqrt(n_mc)
    assert abs(mean) <= tol


def test_seeded_determinism(rng):
    op = _torus_operator(rng)
    seeds = RandomSeedPair(5, 9)
    a = randomize_operator(op, seeds.rngs())
    b = randomize_operator(op, seeds.rngs())
    assert np.array_equal(a.g2_draws, b.g2_draws)
    for fa, fb in zip(a.randomized_functions, b.randomized_functions):
        assert np.array_equal(fa.values, fb.values)


def test_randomize_operator_ball(rng):
    system = random_ball_system(ball_grid(64), 2, 8, rng)
    op = CompactOperatorRep(np.array([1.0, 0.5]), system)
    rop = randomize_operator(op, RandomSeedPair(3, 4).rngs())
    m = np.arange(1, 9)
    g1 = np.array(rop.randomized_functions[0].coeffs * m * math.pi / system.functions[0].coeffs)
    g1_other = np.array(rop.randomized_functions[1].coeffs * m * math.pi / system.functions[1].coeffs)
    # the block draws are shared across the family
    assert np.max(np.abs(g1 - g1_other)) <= 1e-10


# ---------------------------------------------------------------------------
# Khinchin ratios
# ---------------------------------------------------------------------------


def test_khinchin_r2_identity(rng):
    # the r = 2 ratio is exactly 1 for unit-variance draws: the Monte-Carlo
    # estimate lands within 3/sqrt(n_samples)
    n = 10_000
    a = np.array([0.3, 1.2, -0.7, 0.1])
    assert math.isclose(khinchin_ratio(a, 2.0, n, rng), 1.0, abs_tol=3.0 / math.sqrt(n))


def test_khinchin_r4_gaussian_moment(rng):
    a = np.array([1.0, 2.0, 0.5])
    assert math.isclose(khinchin_ratio(a, 4.0, 10_000, rng), 3.0**0.25, abs_tol=0.05)


def test_khinchin_single_entry_matches_abs_moment(rng):
    for r in (2.0, 3.0, 5.0):
        ratio = khinchin_ratio(np.array([2.0]), r, 20_000, rng)
        assert math.isclose(ratio, gaussian_abs_moment(r) ** (1.0 / r), rel_tol=0.05)


def test_khinchin_rejects_small_r(rng):
    with pytest.raises(ValueError):
        khinchin_ratio(np.ones(3), 1.0, 10, rng)


# ---------------------------------------------------------------------------
# stochastic continuity
# ---------------------------------------------------------------------------


def test_stochastic_continuity_zero_at_t0(rng):
    op = _torus_operator(rng)
    table = stochastic_continuity_experiment(op, [0.25, 0.0], 2.0, 50, RandomSeedPair(1, 2))
    assert table.point_norm[-1] == 0.0
    assert table.l2_norm[-1] == 0.0


def test_stochastic_continuity_single_mode_vanishes(rng):
    # |e^{i t phi(j)} f^omega|^2 = |f^omega|^2 when f^omega is one mode
    grid = torus_grid(128)
    system = OrthonormalSystem((fourier_mode(grid, 5),), L2())
    op = CompactOperatorRep(np.array([1.0]), system)
    table = stochastic_continuity_experiment(
        op, [0.5, 0.125, 0.0], 2.0, 40, RandomSeedPair(8, 9)
    )
    assert np.max(table.point_norm) <= 1e-12
    assert np.max(table.l2_norm) <= 1e-12


def test_stochastic_continuity_decreasing_tail(rng):
    grid = torus_grid(128)
    system = random_band_limited_system(grid, 4, 2, rng)
    op = CompactOperatorRep(np.array([1.0, 0.7, 0.4, 0.2]), system)
    t_list = [2.0**-m for m in range(2, 13)] + [0.0]
    table = stochastic_continuity_experiment(op, t_list, 2.0, 300, RandomSeedPair(21, 22))
    pn = table.point_norm[:-1]
    assert np.all(np.diff(pn) < 0.05 * pn[:-1])
    assert pn[-1] <= 0.1 * pn[0]


def test_stochastic_continuity_rejects_small_r(rng):
    op = _torus_operator(rng)
    with pytest.raises(ValueError):
        stochastic_continuity_experiment(op, [0.1], 1.5, 10, RandomSeedPair(1, 2))
