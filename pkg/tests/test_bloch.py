import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fkdv.bloch import (
    TOL_STABLE,
    TOL_UNSTABLE,
    assemble_bloch,
    block_oracle,
    classify,
    default_xi_grid,
    dense_eigenvalues,
    dispersion_omega,
    hausdorff,
    match_spectra,
    periodic_extension_matrices,
    significant_growth,
    slice_spectrum,
    stability_sweep,
    symmetry_check,
)
from fkdv.waves import ModelParams, solve_wave


def test_dispersion_examples():
    prm = ModelParams(2, 1)
    assert dispersion_omega(prm, [1, 0, -1]).tolist() == [0, 0, 0]
    assert dispersion_omega(prm, 2) == 6
    prm3 = ModelParams(1, 3)
    assert dispersion_omega(prm3, 2.0) == 6 == 2 * 3 * (2 ** 1 - 1)


def test_companion_matrix_eigenvalues():
    roots = np.array([1, 2j, -3])
    c = np.poly(roots)
    C = np.zeros((3, 3), complex)
    C[0] = -c[1:]
    C[1, 0] = C[2, 1] = 1
    got = dense_eigenvalues(C)
    assert match_spectra(got, roots) <= 1e-10


@pytest.mark.parametrize("xi", [0.0, 0.1, 0.25, 0.49, -0.3])
def test_constant_state_is_diagonal_dispersion(xi):
    prm = ModelParams(2, 1)
    w = solve_wave(prm, 0.0)
    bm = assemble_bloch(w, xi)
    n = np.arange(-w.N, w.N + 1)
    assert np.allclose(bm.M, np.diag(1j * dispersion_omega(prm, n + xi)), atol=1e-12)
    lam = slice_spectrum(bm).eigenvalues
    assert match_spectra(lam, 1j * dispersion_omega(prm, n + xi)) <= 1e-9
    assert slice_spectrum(bm).max_real_part <= 1e-10


def test_quarter_frequency_mode():
    w = solve_wave(ModelParams(2, 1), 0.0)
    lam = slice_spectrum(assemble_bloch(w, 0.25)).eigenvalues
    assert np.min(np.abs(lam - 0.703125j)) <= 1e-12


def test_matrix_structure(wave_cache):
    w = wave_cache(1.5, 2, 0.08, 0.01)
    for xi in (0.0, 0.17, -0.4):
        bm = assemble_bloch(w, xi)
        assert bm.hermitian_defect() <= 1e-12
        assert bm.factorization_defect() == 0.0
        rng = np.random.default_rng(0)
        v = rng.normal(size=bm.L.shape[0]) + 1j * rng.normal(size=bm.L.shape[0])
        q = np.vdot(v, bm.L @ v)
        assert abs(q.imag) <= 1e-12 * abs(q)


def test_translation_mode_in_kernel(wave_cache):
    w = wave_cache(2, 2, 0.1)
    bm = assemble_bloch(w, 0.0)
    n = w.profile.modes
    dz = 1j * n * w.profile.coeffs
    assert np.linalg.norm(bm.L @ dz) <= 1e-9
    assert np.linalg.norm(bm.M @ dz) <= 1e-9


@pytest.mark.parametrize("alpha,p", [(2, 1), (0.8, 1), (2, 3), (3, 2)])
def test_zero_frequency_triple(wave_cache, alpha, p):
    w = wave_cache(alpha, p, 0.05)
    s = slice_spectrum(assemble_bloch(w, 0.0))
    assert s.structured
    assert np.sort(np.abs(s.eigenvalues))[:3].max() <= 1e-7
    assert s.max_real_part <= 1e-10
    # origin symmetry at xi = 0
    assert match_spectra(s.eigenvalues, -s.eigenvalues) <= 1e-9


def test_structured_and_plain_solvers_agree(wave_cache):
    w = wave_cache(2, 1, 0.05)
    bm = assemble_bloch(w, 0.0)
    a = slice_spectrum(bm).eigenvalues
    b = slice_spectrum(bm, structured=False).eigenvalues
    assert match_spectra(a, b) <= 1e-6


def test_constant_state_gap_between_bands():
    for alpha, p in [(2, 1), (1.5, 2), (3, 3)]:
        prm = ModelParams(alpha, p)
        lo = p / 2 * (2 ** -alpha - 1)
        hi = 1.5 * p * (1.5 ** alpha - 1)
        # the interval is the xi >= 0 half; negative xi follows by symmetry
        for xi in np.linspace(0.0, 0.49, 23):
            n = np.arange(-32, 33)
            om = dispersion_omega(prm, n + xi)
            inner = om[np.abs(n) <= 1]
            outer = om[np.abs(n) >= 2]
            assert np.all((inner >= lo - 1e-12) & (inner <= hi + 1e-12))
            assert np.all((outer < lo) | (outer > hi))


def test_krein_signatures_constant_state():
    prm = ModelParams(2, 1)
    w = solve_wave(prm, 0.0)
    xi = 0.2
    bm = assemble_bloch(w, xi)
    s = slice_spectrum(bm, with_krein=True)
    n = np.arange(-w.N, w.N + 1)
    for lam, sig in zip(s.eigenvalues, s.krein):
        k = n[np.argmin(np.abs(1j * dispersion_omega(prm, n + xi) - lam))]
        if abs(k) >= 2:
            assert sig == 1
    # the quadratic form on the sigma_1 modes is bounded below
    lower = (1.5 ** 2 - 1) * 1
    diag = np.real(np.diag(bm.L))
    assert np.all(diag[np.abs(n) >= 2] >= lower)


def test_krein_skips_clusters(wave_cache):
    s = slice_spectrum(assemble_bloch(wave_cache(2, 1, 0.05), 0.0), with_krein=True)
    assert s.skipped_clusters == 3
    assert np.isnan(s.krein).sum() == 3


def test_classification_thresholds():
    assert classify(0.0) == "stable"
    assert classify(TOL_STABLE) == "stable"
    assert classify(5e-7) == "indeterminate"
    assert classify(TOL_UNSTABLE) == "unstable"


def test_roundoff_floor_only_affects_large_modes():
    lam = np.array([1e-7 + 1e8j, 2e-4 + 0.1j, -3e-3j])
    assert significant_growth(lam) == 2e-4
    assert significant_growth(np.array([1e-7 + 1e3j])) == 1e-7


def test_default_grid():
    g = default_xi_grid()
    assert g[0] == 0 and g[-1] == 0.5 and len(g) == 64 + 8
    assert 1e-4 in g and 1.28e-2 in g


@pytest.mark.parametrize("alpha,p,expect", [(2, 1, "stable"), (2, 3, "unstable"), (3, 2, "stable"),
                                            (0.8, 1, "unstable")])
def test_stability_examples(wave_cache, alpha, p, expect):
    v = stability_sweep(wave_cache(alpha, p, 0.05))
    assert v.classification == expect
    if expect == "unstable":
        assert v.growth_rate >= 1e-4 and v.converged
        assert 0 < v.worst_xi <= 0.5


def test_sweep_threads_identical(wave_cache):
    w = wave_cache(2, 3, 0.05)
    grid = default_xi_grid(12)
    a = stability_sweep(w, grid, threads=1, convergence_check=False)
    b = stability_sweep(w, grid, threads=4, convergence_check=False)
    assert a.growth_rate == b.growth_rate and a.worst_xi == b.worst_xi


def test_sweep_rejects_bad_grid(wave_cache):
    with pytest.raises(ValueError):
        stability_sweep(wave_cache(2, 1, 0.05), [0.1, 0.7])


def test_oracle_single_period(wave_cache):
    r = block_oracle(wave_cache(2, 2, 0.05, N=24), 1)
    assert r.hausdorff == 0.0 and r.passed


def test_oracle_constant_state_two_periods():
    prm = ModelParams(2, 1)
    w = solve_wave(prm, 0.0, N=12)
    (M, _), xis = periodic_extension_matrices(w, 2)
    assert xis == [-0.5, 0.0]
    big = np.diag(M)
    assert np.allclose(M, np.diag(big), atol=1e-12)
    union = np.concatenate([1j * dispersion_omega(prm, np.arange(-12, 13) + xi) for xi in (0, -0.5)])
    assert hausdorff(big, union) <= 1e-12


@pytest.mark.parametrize("params", [(2, 2, 0.05), (1.5, 1, 0.08), (3, 2.5, 0.04)])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_oracle_periods(params, n):
    alpha, p, a = params
    w = solve_wave(ModelParams(alpha, p), a, N=16)
    r = block_oracle(w, n)
    assert r.passed, r


def test_symmetries(wave_cache):
    w = wave_cache(2, 2, 0.05, N=24)
    for xi in (0.2, 0.35):
        r = symmetry_check(w, xi)
        assert r.passed, r
    r = symmetry_check(solve_wave(ModelParams(2, 2), 0.0, N=24), 0.3)
    assert r.passed
    assert r.amplitude_flip == 0.0


@settings(max_examples=10, deadline=None)
@given(st.floats(1.0, 2.5), st.floats(1.0, 3.0), st.floats(0.01, 0.1), st.floats(0.01, 0.5))
def test_axis_reflection_random(alpha, p, a, xi):
    w = solve_wave(ModelParams(alpha, p), a, N=16)
    lam = slice_spectrum(assemble_bloch(w, xi)).eigenvalues
    assert match_spectra(lam, -np.conj(lam)) <= 1e-9
