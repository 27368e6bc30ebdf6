"""Breakup of the triple eigenvalue at the origin for small Bloch frequency.

The three critical eigenvalues are written ``lambda = i p xi X`` with ``X`` a
root of a real monic cubic; the sign of its discriminant separates three
purely imaginary eigenvalues from an off-axis pair.  Closed forms for the
constant state and for the ``a^2`` coefficient of the discriminant are
collected here together with the numerical routes that check them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .bloch import assemble_bloch, slice_spectrum
from .errors import DomainError, ReductionError
from .torus import RealPeriodicFunction, derivative
from .waves import (
    FamilyDerivatives,
    ModelParams,
    WaveSolution,
    bifurcation_wavenumber,
    family_derivatives,
    solve_wave,
)

RICHARDSON_XI = (0.02, 0.01, 0.005)


def _pstar_parts(alpha):
    t = 2.0 ** alpha
    num = t * (3 + alpha) - 4 - 2 * alpha
    den = 2 + t * (alpha - 1)
    return num, den


def _pstar_scaled(alpha):
    # numerator and denominator divided by 2^alpha; safe for large alpha
    s = 2.0 ** -alpha
    return (3 + alpha) - (4 + 2 * alpha) * s, (alpha - 1) + 2 * s


def critical_power(alpha: float) -> float:
    """Critical nonlinearity ``p*(alpha)`` separating stable from unstable small waves."""
    num, den = _pstar_parts(alpha) if alpha <= 60 else _pstar_scaled(alpha)
    if den == 0:
        raise DomainError("critical power undefined: vanishing denominator")
    return num / den


def _pstar_slope_numerator(alpha):
    t = 2.0 ** alpha
    ln2 = math.log(2.0)
    num, den = _pstar_parts(alpha)
    dnum = t * ln2 * (3 + alpha) + t - 2
    dden = t * ln2 * (alpha - 1) + t
    return dnum * den - num * dden


def critical_power_max(lo: float = 1.0, hi: float = 10.0) -> tuple[float, float]:
    """Location and value of the maximum of ``p*`` on ``[lo, hi]``."""
    a_star = brentq(_pstar_slope_numerator, max(lo, 1.5), min(hi, 5.0), xtol=1e-14, rtol=1e-15)
    return a_star, critical_power(a_star)


def alpha_window(p: float) -> tuple[float, float]:
    """Dispersion interval on which waves with nonlinearity ``p`` are stable."""
    a_star, p_max = critical_power_max()
    if not 1 < p < p_max:
        raise DomainError(f"p must lie in (1, {p_max:.6f})")
    f = lambda al: critical_power(al) - p
    lo = brentq(f, 1.0, a_star, xtol=1e-13)
    hi = 2 * a_star
    while f(hi) > 0:
        hi *= 2
        if hi > 1e6:
            raise DomainError("upper window edge not bracketed")
    return lo, brentq(f, a_star, hi, xtol=1e-13)


def gamma_bracket(alpha: float, p: float) -> float:
    """Sign-carrying factor ``2^a(4-(p-1)(a-1)) - 4 - 2(a+p)`` of the ``a^2`` coefficient."""
    return 2.0 ** alpha * (4 - (p - 1) * (alpha - 1)) - 4 - 2 * (alpha + p)


def gamma_coefficient(alpha: float, p: float) -> float:
    """Coefficient of ``a^2`` in the discriminant at ``b = 0, xi -> 0``."""
    pref = (p + 1) * alpha * (1 + alpha) ** 4 / (2 * (2.0 ** alpha - 1))
    return pref * gamma_bracket(alpha, p)


def a1a2(alpha: float, xi: float) -> tuple[float, float, float]:
    def A1(x):
        return -1 + (1 + x) ** (alpha + 1) - x * abs(x) ** alpha
    A2 = -2 + (1 - xi) ** (alpha + 1) + (1 + xi) ** (alpha + 1)
    return A1(xi), A1(-xi), A2


def delta_constant_state(params: ModelParams, b: float, xi: float) -> float:
    """Closed-form discriminant for the constant state ``a = 0``."""
    if xi == 0:
        raise DomainError("xi = 0 is a removable singularity; use the small-xi limit")
    K = bifurcation_wavenumber(params, b)
    A1p, A1m, A2 = a1a2(params.alpha, xi)
    return K ** 6 / (params.p ** 6 * xi ** 6) * (A1p * A1m * A2) ** 2


def delta_constant_state_limit(params: ModelParams, b: float) -> float:
    """Leading ``xi^2`` coefficient of :func:`delta_constant_state`."""
    K = bifurcation_wavenumber(params, b)
    al = params.alpha
    return K ** 6 * al ** 2 * (al + 1) ** 6 / params.p ** 6


def cubic_discriminant(d2, d1, d0):
    return 18 * d2 * d1 * d0 + d2 ** 2 * d1 ** 2 - 4 * d2 ** 3 * d0 - 4 * d1 ** 3 - 27 * d0 ** 2


@dataclass
class CubicReduction:
    d2: float
    d1: float
    d0: float
    discriminant: float
    roots: np.ndarray
    verdict: str
    imag_residue: float


def cubic_from_eigenvalues(lams, p: float, xi: float, tie_tol: float = 1e-12) -> CubicReduction:
    """Rescaled cubic whose roots are ``lambda / (i p xi)``."""
    lams = np.asarray(lams, dtype=complex)
    if lams.size != 3:
        raise ReductionError("need exactly three critical eigenvalues")
    if xi == 0:
        raise DomainError("xi must be nonzero")
    X = lams / (1j * p * xi)
    d2c = -X.sum()
    d1c = X[0] * X[1] + X[0] * X[2] + X[1] * X[2]
    d0c = -X.prod()
    scale = max(1.0, abs(d2c), abs(d1c), abs(d0c))
    resid = max(abs(d2c.imag), abs(d1c.imag), abs(d0c.imag)) / scale
    if resid > 1e-6:
        raise ReductionError("symmetry violated; triple mis-identified")
    d2, d1, d0 = d2c.real, d1c.real, d0c.real
    disc = cubic_discriminant(d2, d1, d0)
    verdict = "three-real" if disc > tie_tol else "complex-pair"
    return CubicReduction(d2, d1, d0, disc, X, verdict, resid)


def critical_triple(w: WaveSolution, xi: float, N: int | None = None) -> np.ndarray:
    """The three Bloch eigenvalues of smallest modulus.

    Raises if they are not separated from the rest of the spectrum by the
    band edge of the constant state.
    """
    lam = slice_spectrum(assemble_bloch(w, xi, N)).eigenvalues
    lam = lam[np.argsort(np.abs(lam))]
    prm = w.params
    band = 1.5 * prm.p * (1.5 ** prm.alpha - 1)
    if np.abs(lam[3]) <= np.abs(lam[2]) or (np.abs(lam[2]) >= band and np.abs(lam[3]) < band):
        raise ReductionError("critical triple cannot be isolated from the outer spectrum")
    return lam[:3]


def critical_gap(w: WaveSolution, xi: float, N: int | None = None) -> float:
    """Distance from the critical triple to the nearest outer eigenvalue."""
    lam = slice_spectrum(assemble_bloch(w, xi, N)).eigenvalues
    lam = lam[np.argsort(np.abs(lam))]
    return float(np.min(np.abs(lam[3:, None] - lam[None, :3])))


def discriminant_at(w: WaveSolution, xi: float, N: int | None = None) -> CubicReduction:
    return cubic_from_eigenvalues(critical_triple(w, xi, N), w.params.p, xi)


def extrapolated_discriminant(w: WaveSolution, xis=RICHARDSON_XI, N: int | None = None):
    """Richardson extrapolation ``xi -> 0`` assuming an expansion in ``xi^2``."""
    xis = np.asarray(xis, dtype=float)
    vals = np.array([discriminant_at(w, x, N).discriminant for x in xis])
    A = np.vander(xis ** 2, len(xis), increasing=True)
    coef = np.linalg.solve(A, vals)
    return float(coef[0]), vals


@dataclass
class CriticalBasis:
    eta0: RealPeriodicFunction
    eta1: RealPeriodicFunction
    eta2: RealPeriodicFunction

    def as_list(self):
        return [self.eta0, self.eta1, self.eta2]


@dataclass
class ReducedMatrices:
    B: np.ndarray
    I: np.ndarray
    xi: float
    sigma: float
    pattern_defect: float


def critical_basis(w: WaveSolution, d: FamilyDerivatives | None = None) -> CriticalBasis:
    """Generalized kernel of the Bloch operator at ``xi = 0``."""
    if d is None:
        d = family_derivatives(w)
    p, K = w.params.p, w.wavenumber_alpha
    P = w.profile
    eta0 = (d.dk_alpha_db * d.dP_da - d.dk_alpha_da * d.dP_db) * (1.0 / (p + 1))
    if w.a == 0:
        eta1 = RealPeriodicFunction.sine(1, 1.0, w.N)
    else:
        eta1 = derivative(P) * (-1.0 / w.a)
    eta2 = d.dk_alpha_db * P - (p * K) * d.dP_db
    return CriticalBasis(eta0, eta1, eta2)


def _inner(f, g):
    return 2 * math.pi * np.vdot(f, g)


def project_operator(op: np.ndarray, basis: CriticalBasis, xi: float = 0.0) -> ReducedMatrices:
    """``B[j,k] = <eta_j, op eta_k>/<eta_j, eta_j>`` and the matching Gram matrix ``I``."""
    E = [e.coeffs for e in basis.as_list()]
    B = np.zeros((3, 3), dtype=complex)
    I = np.zeros((3, 3), dtype=complex)
    for j in range(3):
        nj = _inner(E[j], E[j]).real
        if nj <= 1e-12:
            raise ReductionError("degenerate basis: <eta_j, eta_j> vanishes")
        for k in range(3):
            B[j, k] = _inner(E[j], op @ E[k]) / nj
            I[j, k] = _inner(E[j], E[k]) / nj
    mask = np.ones((3, 3), bool)
    mask[1, 2] = False
    defect = float(np.max(np.abs(B[mask])))
    return ReducedMatrices(B, I, float(xi), B[1, 2].real, defect)


def reduced_matrices_at_zero_xi(w: WaveSolution, d: FamilyDerivatives | None = None) -> ReducedMatrices:
    """Action of ``M_{a,b,0}`` and the identity on the critical basis."""
    basis = critical_basis(w, d)
    return project_operator(assemble_bloch(w, 0.0).M, basis, 0.0)


def constant_state_reduced(params: ModelParams, xi: float) -> np.ndarray:
    """``B_{0,0,xi}`` in the basis ``cos z, sin z, 1``."""
    from .bloch import dispersion_omega
    wp, wm, w0 = (float(dispersion_omega(params, k)) for k in (1 + xi, -1 + xi, xi))
    return np.array([[0.5j * (wp + wm), 0.5 * (wp - wm), 0],
                     [-0.5 * (wp - wm), 0.5j * (wp + wm), 0],
                     [0, 0, 1j * w0]])


def b1_prediction(alpha: float, p: float) -> tuple[complex, complex]:
    top = (alpha - 1) * p * (p + 1) + p * (2 + 2.0 ** alpha * (p - 1)) / (2 * (2.0 ** alpha - 1))
    return 1j * top, 0.5j * top


@dataclass
class ScalingReport:
    params: ModelParams
    amplitudes: list
    discriminants: list
    fitted_gamma: float
    gamma: float
    relative_error: float
    b1_measured: tuple
    b1_predicted: tuple
    b1_relative_error: float
    passed: bool


def discriminant_scaling_check(params: ModelParams, amplitudes=(0.03, 0.05), xi_small: float = 1e-3,
                               *, N: int = 32, rel_tol: float = 0.05,
                               b1_tol: float = 0.10) -> ScalingReport:
    """Fit the ``a^2`` coefficient of the extrapolated discriminant and test ``B_1``.

    With two amplitudes the fit is ``Delta = g a^2 + h a^4``; with one it is
    ``Delta / a^2``.  ``B_1`` is measured from the critical basis at ``xi = 0``
    applied to ``M_{a,0,xi_small}`` at the smallest amplitude.
    """
    amps = np.asarray(amplitudes, dtype=float)
    deltas = []
    waves = []
    for a in amps:
        w = solve_wave(params, a, 0.0, N=N)
        waves.append(w)
        deltas.append(extrapolated_discriminant(w)[0])
    deltas = np.array(deltas)
    if amps.size >= 2:
        A = np.stack([amps ** 2, amps ** 4], axis=1)
        fit = float(np.linalg.lstsq(A, deltas, rcond=None)[0][0])
    else:
        fit = float(deltas[0] / amps[0] ** 2)
    gam = gamma_coefficient(params.alpha, params.p)
    rel = abs(fit - gam) / abs(gam) if gam != 0 else math.inf

    w = waves[int(np.argmin(np.abs(amps)))]
    basis = critical_basis(w)
    B_a0 = project_operator(assemble_bloch(w, 0.0).M, basis).B
    B_ax = project_operator(assemble_bloch(w, xi_small).M, basis).B
    B1 = (B_ax - constant_state_reduced(params, xi_small) - B_a0) / (w.a * xi_small)
    pred = b1_prediction(params.alpha, params.p)
    meas = (complex(B1[0, 2]), complex(B1[2, 0]))
    b1_err = max(abs(m - q) / abs(q) for m, q in zip(meas, pred))
    return ScalingReport(params, list(amps), list(deltas), fit, gam, rel, meas, pred, b1_err,
                         rel <= rel_tol and b1_err <= b1_tol)


def reduced_matrices(w: WaveSolution, xi: float, d: FamilyDerivatives | None = None) -> ReducedMatrices:
    """``M_{a,b,xi}`` compressed onto the ``xi = 0`` critical basis.

    Exact at the constant state, where the basis spans an invariant subspace
    for every ``xi``; otherwise accurate to first order in ``xi``.
    """
    return project_operator(assemble_bloch(w, xi).M, critical_basis(w, d), xi)


def discriminant_from_reduced(R: ReducedMatrices, p: float) -> CubicReduction:
    """Cubic reduction from the eigenvalues of ``I^{-1} B``."""
    lams = np.linalg.eigvals(np.linalg.solve(R.I, R.B))
    return cubic_from_eigenvalues(lams, p, R.xi)
