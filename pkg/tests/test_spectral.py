import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bqlab.grids import ball_grid, line_grid, torus_grid
from bqlab.spectral import (
    HomSobolev,
    L2,
    CompactOperatorRep,
    OrthonormalSystem,
    WaveFunction,
    ball_basis,
    ball_wavefunction,
    boussinesq_symbol,
    density_function,
    fourier_mode,
    gram_deviation,
    gram_matrix,
    gram_orthonormalize,
    homogeneous_sobolev_lift,
    inner_product,
    l2_norm,
    line_mode,
    operator_kernel,
    propagate,
    random_ball_system,
    random_band_limited_system,
    truncated_propagate_torus,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# symbol
# ---------------------------------------------------------------------------


def test_symbol_reference_values():
    assert boussinesq_symbol(0.0) == 0.0
    assert math.isclose(boussinesq_symbol(1.0), math.sqrt(2.0), rel_tol=1e-15)
    assert math.isclose(boussinesq_symbol(2.0), math.sqrt(20.0), rel_tol=1e-15)


@given(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_symbol_even_and_dominates_square(xi):
    assert boussinesq_symbol(xi) == boussinesq_symbol(-xi)
    assert boussinesq_symbol(xi) >= 0.0
    if abs(xi) >= 1.0:
        assert boussinesq_symbol(xi) >= xi * xi


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


def test_propagate_identity_at_zero(torus256, rng):
    f = random_band_limited_system(torus256, 1, 20, rng).functions[0]
    u = propagate(f, 0.0)
    assert np.max(np.abs(u.values - f.values)) <= 1e-12


def test_propagate_single_mode_phase(torus256):
    # e^{ijx} picks up exactly the phase e^{i t sqrt(j^2 + j^4)}
    j, t = 5, 0.83
    f = fourier_mode(torus256, j)
    u = propagate(f, t)
    expected = np.exp(1j * t * math.sqrt(j**2 + j**4)) * f.values
    assert np.max(np.abs(u.values - expected)) <= 1e-12


def test_propagate_unitary_and_group_law(line1024, rng):
    f = random_band_limited_system(line1024, 1, 40, rng).functions[0]
    n0 = l2_norm(f)
    for t in (0.1, 1.0, 7.3):
        assert abs(l2_norm(propagate(f, t)) - n0) <= 1e-10 * n0
    two_step = propagate(propagate(f, 0.4), 0.35)
    one_step = propagate(f, 0.75)
    err = math.sqrt(
        float(np.sum(np.abs(two_step.values - one_step.values) ** 2) * line1024.cell_measure[0])
    )
    assert err <= 1e-10 * n0


def test_ball_propagation_requires_coefficients(ball128):
    f = WaveFunction(ball128, np.ones(ball128.n, dtype=complex))
    with pytest.raises(ValueError, match="eigenbasis coefficients"):
        propagate(f, 0.5)


def test_ball_propagation_unitary(ball128, rng):
    f = random_ball_system(ball128, 1, 20, rng).functions[0]
    assert abs(l2_norm(propagate(f, 3.0)) - 1.0) <= 1e-10


def test_ball_mode_phase(ball128):
    m = 3
    c = np.zeros(8, dtype=complex)
    c[m - 1] = 1.0
    f = ball_wavefunction(ball128, c)
    t = 0.21
    u = propagate(f, t)
    phase = np.exp(1j * t * math.sqrt((m * math.pi) ** 2 + (m * math.pi) ** 4))
    assert np.max(np.abs(u.coeffs - phase * c)) <= 1e-12


# ---------------------------------------------------------------------------
# truncated propagation on the torus
# ---------------------------------------------------------------------------


def test_truncated_mode_within_cutoff(torus256):
    j, t, n_max = 3, 0.42, 8
    f = fourier_mode(torus256, j, normalized=False)
    u = truncated_propagate_torus(f, t, n_max)
    expected = np.exp(1j * (j * torus256.points + t * math.sqrt(j**2 + j**4))) / TWO_PI
    assert np.max(np.abs(u.values - expected)) <= 1e-12
    assert np.max(np.abs(np.abs(u.values) - 1.0 / TWO_PI)) <= 1e-12


def test_truncated_kills_high_modes(torus256):
    f = fourier_mode(torus256, 12, normalized=False)
    u = truncated_propagate_torus(f, 0.9, 8)
    assert np.max(np.abs(u.values)) <= 1e-12


def test_truncated_flat_spectrum_value_at_origin(torus256):
    n_max = 8
    k = np.arange(-n_max, n_max + 1)
    vals = np.sum(np.exp(1j * np.outer(torus256.points, k)), axis=1)
    f = WaveFunction(torus256, vals)
    u = truncated_propagate_torus(f, 0.0, n_max)
    assert abs(u.values[0] - (2 * n_max + 1) / TWO_PI) <= 1e-10


def test_truncated_nyquist_guard(torus64):
    f = fourier_mode(torus64, 1)
    with pytest.raises(ValueError, match="Nyquist"):
        truncated_propagate_torus(f, 0.1, 33)


# ---------------------------------------------------------------------------
# density and kernel
# ---------------------------------------------------------------------------


def _random_operator(grid, rank, max_mode, rng, signed=True):
    system = random_band_limited_system(grid, rank, max_mode, rng)
    lam = rng.standard_normal(rank) if signed else rng.uniform(0.1, 1.0, rank)
    return CompactOperatorRep(lam, system)


def test_density_at_zero_is_base_density(torus256, rng):
    op = _random_operator(torus256, 3, 12, rng)
    rho = density_function(op, 0.0)
    direct = sum(
        lam * np.abs(f.values) ** 2 for lam, f in zip(op.eigenvalues, op.system.functions)
    )
    assert np.max(np.abs(rho.values - direct)) <= 1e-12


def test_density_trace_identity(torus256, rng):
    op = _random_operator(torus256, 5, 20, rng)
    total = float(np.sum(op.eigenvalues))
    scale = float(np.sum(np.abs(op.eigenvalues)))
    for t in (0.0, 0.1, 1.0):
        assert abs(density_function(op, t).integral() - total) <= 1e-8 * scale


def test_rank_one_fourier_mode_density_is_flat(torus256):
    # |e^{i t phi} e^{ijx} / sqrt(2 pi)|^2 = 1/(2 pi), by hand
    system = OrthonormalSystem((fourier_mode(torus256, 4),), L2())
    op = CompactOperatorRep(np.array([1.0]), system)
    rho = density_function(op, 0.63)
    assert np.max(np.abs(rho.values - 1.0 / TWO_PI)) <= 1e-12


def test_kernel_diag_hermitian_trace(line1024, rng):
    op = _random_operator(line1024, 4, 30, rng)
    t = 0.7
    kernel = operator_kernel(op, t)
    rho = density_function(op, t)
    assert np.max(np.abs(np.diag(kernel).real - rho.values)) <= 1e-12
    assert np.max(np.abs(kernel - kernel.conj().T)) <= 1e-12
    trace = float(np.sum(np.diag(kernel).real * line1024.cell_measure))
    assert abs(trace - float(np.sum(op.eigenvalues))) <= 1e-8 * float(
        np.sum(np.abs(op.eigenvalues))
    )


def test_kernel_memory_guard(rng):
    big = line_grid(8192)
    op = _random_operator(big, 1, 10, rng)
    with pytest.raises(ValueError, match="memory budget"):
        operator_kernel(op, 0.0)


# ---------------------------------------------------------------------------
# Gram-Schmidt and the Sobolev lift
# ---------------------------------------------------------------------------


def test_gram_orthonormalize_fixes_nothing_for_fourier_modes(torus256):
    raw = [fourier_mode(torus256, j) for j in (-2, 1, 5)]
    system = gram_orthonormalize(raw, L2())
    for before, after in zip(raw, system.functions):
        ratio = after.values / before.values
        assert np.max(np.abs(ratio - ratio[0])) <= 1e-10
        assert abs(abs(ratio[0]) - 1.0) <= 1e-10


def test_gram_orthonormalize_rank_deficiency(torus256):
    f = fourier_mode(torus256, 2)
    doubled = WaveFunction(torus256, 2.0 * f.values)
    with pytest.raises(ValueError, match="index 1"):
        gram_orthonormalize([f, doubled], L2())


def test_gram_orthonormalize_random_family(line1024, rng):
    raw = []
    for _ in range(6):
        coef = np.zeros(line1024.n, dtype=complex)
        idx = np.r_[0:25, line1024.n - 24 : line1024.n]
        coef[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
        raw.append(WaveFunction(line1024, np.fft.ifft(coef)))
    system = gram_orthonormalize(raw, L2())
    gram = gram_matrix(system.functions, L2())
    assert np.max(np.abs(gram - np.eye(6))) <= 1e-8


def test_orthonormal_system_invariant_enforced(torus256):
    f = fourier_mode(torus256, 1)
    g = WaveFunction(torus256, 1.1 * fourier_mode(torus256, 2).values)
    with pytest.raises(ValueError, match="not orthonormal"):
        OrthonormalSystem((f, g), L2())


def test_sobolev_lift_unit_frequency_fixed(torus256):
    f = fourier_mode(torus256, 1)
    lifted = homogeneous_sobolev_lift(f, 0.25)
    assert np.max(np.abs(lifted.values - f.values)) <= 1e-12


def test_sobolev_lift_scales_by_power(torus256):
    f = fourier_mode(torus256, 2)
    lifted = homogeneous_sobolev_lift(f, 0.5)
    assert np.max(np.abs(lifted.values - f.values * 2.0**-0.5)) <= 1e-12


def test_sobolev_lift_rejects_mean(torus256):
    const = WaveFunction(torus256, np.full(torus256.n, 1.0 + 0j))
    with pytest.raises(ValueError, match="zero frequency"):
        homogeneous_sobolev_lift(const, 0.25)


def test_lifted_family_is_sobolev_orthonormal(line1024, rng):
    base = random_band_limited_system(line1024, 4, 30, rng, mean_zero=True)
    lifted = tuple(homogeneous_sobolev_lift(f, 0.25) for f in base.functions)
    system = OrthonormalSystem(lifted, HomSobolev(0.25))
    assert gram_deviation(system.functions, HomSobolev(0.25)) <= 1e-8


# ---------------------------------------------------------------------------
# ball representation details
# ---------------------------------------------------------------------------


def test_ball_basis_orthonormal_under_quadrature(ball128):
    basis = ball_basis(ball128, 32)
    gram = (basis * ball128.cell_measure[:, None]).T @ basis
    assert np.max(np.abs(gram - np.eye(32))) <= 1e-12


def test_ball_values_derive_from_coeffs(ball128, rng):
    c = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    f = ball_wavefunction(ball128, c)
    r = ball128.points
    direct = sum(
        c[m - 1] * np.sin(m * math.pi * r) / (math.sqrt(TWO_PI) * r) for m in range(1, 11)
    )
    assert np.max(np.abs(f.values - direct)) <= 1e-12
    assert abs(l2_norm(f) - np.linalg.norm(c)) <= 1e-12


def test_inner_product_measures(line1024):
    f = line_mode(line1024, 3)
    g = line_mode(line1024, 4)
    assert abs(inner_product(f, f) - 1.0) <= 1e-12
    assert abs(inner_product(f, g)) <= 1e-12
