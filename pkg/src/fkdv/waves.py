"""Small-amplitude periodic waves of the rescaled fractional KdV profile equation

    -K Lambda^alpha P - P + P^(p+1) = b,   K = k^alpha,

computed by Newton continuation in the amplitude ``a`` (the first cosine
coefficient) with ``b`` held fixed.  Unknowns are the cosine coefficients of
``P`` and ``K``; the amplitude enters as the bordering constraint
``c_1 = a/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContinuationError, DomainError
from .torus import (
    DEFAULT_N,
    RealPeriodicFunction,
    convolution_matrix,
    derivative,
    fractional_multiplier,
    nonlinear_power,
)

A_MAX = 0.2
B_MAX = 0.05
PROFILE_FLOOR = 0.25
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    p: float

    def __post_init__(self):
        if not self.alpha > 0.5:
            raise DomainError("alpha must exceed 1/2")
        if not self.p >= 1:
            raise DomainError("p must be at least 1")


@dataclass(frozen=True)
class WaveSolution:
    params: ModelParams
    a: float
    b: float
    profile: RealPeriodicFunction
    wavenumber_alpha: float
    residual_norm: float
    iterations: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def N(self) -> int:
        return self.profile.N

    @property
    def wavenumber(self) -> float:
        return self.wavenumber_alpha ** (1.0 / self.params.alpha)


@dataclass(frozen=True)
class FamilyDerivatives:
    dP_da: RealPeriodicFunction
    dP_db: RealPeriodicFunction
    dk_alpha_da: float
    dk_alpha_db: float
    dP_dz: RealPeriodicFunction
    residual_a: float = 0.0
    residual_b: float = 0.0
    fd_discrepancy: float | None = None


def equilibrium(params: ModelParams, b: float, tol: float = 1e-15) -> float:
    """Constant solution ``Q_b`` of ``Q^(p+1) - Q = b`` continued from ``Q_0 = 1``."""
    p = params.p
    if b == 0:
        return 1.0
    q = 1 + b / p - (p + 1) * b * b / (2 * p * p)
    for _ in range(50):
        f = q ** (p + 1) - q - b
        df = (p + 1) * q ** p - 1
        if df <= 0:
            break
        dq = f / df
        q -= dq
        if not 0.5 < q < 1.5:
            break
        if abs(dq) <= tol * abs(q):
            return q
    raise ContinuationError("equilibrium continuation lost")


def bifurcation_wavenumber(params: ModelParams, b: float) -> float:
    """``k_{0,b}^alpha = (p+1) Q_b^p - 1``."""
    return (params.p + 1) * equilibrium(params, b) ** params.p - 1


def second_order_profile(params: ModelParams, N: int = DEFAULT_N) -> RealPeriodicFunction:
    """Coefficient ``v2`` of ``a^2`` in the small-amplitude expansion of ``P``."""
    p, al = params.p, params.alpha
    return RealPeriodicFunction.from_modes(
        {0: -(p + 1) / 4, 2: (p + 1) / (8 * (2 ** al - 1))}, N)


def wavenumber_correction(params: ModelParams) -> float:
    """Coefficient ``k1`` of ``a^2`` in ``K(a, 0) = p + k1 a^2 + O(a^4)``."""
    p, al = params.p, params.alpha
    return -p * (p + 1) * (2 ** al * (p + 3) - 2 * (p + 2)) / (8 * (2 ** al - 1))


def profile_residual(params: ModelParams, P: RealPeriodicFunction, K: float,
                     b: float) -> RealPeriodicFunction:
    """Coefficients of ``-K Lambda^alpha P - P + P^(p+1) - b``."""
    r = -K * fractional_multiplier(P, params.alpha) - P + nonlinear_power(P, params.p + 1)
    return r - b


def _profile_from_cosines(y: np.ndarray) -> RealPeriodicFunction:
    return RealPeriodicFunction(np.concatenate([y[:0:-1], y]).astype(complex))


def _bordered_jacobian(params, P: RealPeriodicFunction, K: float) -> np.ndarray:
    """Jacobian of (cosine residuals, c_1 - a/2) in (c_0..c_N, K)."""
    N = P.N
    al, p = params.alpha, params.p
    W = nonlinear_power(P, p).resized(2 * N).coeffs.real
    i = np.arange(N + 1)[:, None]
    m = np.arange(N + 1)[None, :]
    J = np.zeros((N + 2, N + 2))
    J[:N + 1, :N + 1] = (p + 1) * (W[i - m + 2 * N] + np.where(m > 0, W[i + m + 2 * N], 0.0))
    J[:N + 1, :N + 1] -= np.diag(K * np.arange(N + 1) ** al + 1.0)
    J[:N + 1, N + 1] = -(np.arange(N + 1) ** al) * P.coeffs[N:].real
    J[N + 1, 1] = 1.0
    return J


def _check_state(P: RealPeriodicFunction, K: float):
    if not math.isfinite(K):
        raise ContinuationError("continuation failed: non-finite wavenumber")
    if K <= 0:
        raise ContinuationError("left existence regime: k^alpha <= 0")
    if np.min(P.samples(4 * P.N + 4)) <= PROFILE_FLOOR:
        raise ContinuationError("continuation failed: profile dropped below 0.25")


def _newton(params, a, b, P, K, max_iter=50, tol=1e-13):
    N = P.N
    y = P.coeffs[N:].real.copy()
    y[1] = a / 2
    for it in range(1, max_iter + 1):
        P = _profile_from_cosines(y)
        _check_state(P, K)
        F = profile_residual(params, P, K, b).coeffs[N:].real
        res = float(np.linalg.norm(F))
        if res <= tol:
            return P, K, res, it - 1
        J = _bordered_jacobian(params, P, K)
        R = np.concatenate([F, [y[1] - a / 2]])
        try:
            d = np.linalg.solve(J, -R)
        except np.linalg.LinAlgError as exc:
            raise ContinuationError("continuation failed: singular Jacobian") from exc
        y = y + d[:N + 1]
        K = K + d[N + 1]
        if not np.all(np.isfinite(y)):
            raise ContinuationError("continuation failed: Newton diverged")
        if it >= 3 and np.linalg.norm(d) <= 1e-15 * (1 + np.linalg.norm(y)):
            P = _profile_from_cosines(y)
            res = profile_residual(params, P, K, b).norm()
            return P, K, res, it
    P = _profile_from_cosines(y)
    _check_state(P, K)
    res = profile_residual(params, P, K, b).norm()
    if res > RESIDUAL_TOL:
        raise ContinuationError(
            f"continuation failed after {max_iter} Newton steps (residual {res:.2e})")
    return P, K, res, max_iter


def constant_state(params: ModelParams, b: float, N: int = DEFAULT_N) -> WaveSolution:
    Q = equilibrium(params, b)
    K = (params.p + 1) * Q ** params.p - 1
    P = RealPeriodicFunction.constant(Q, N)
    res = profile_residual(params, P, K, b).norm()
    return WaveSolution(params, 0.0, float(b), P, K, res)


def expansion_predictor(params: ModelParams, a: float, b: float, N: int = DEFAULT_N):
    """Two-term small-amplitude guess for ``(P, K)``."""
    Q = equilibrium(params, b)
    P = (RealPeriodicFunction.constant(Q, N) + RealPeriodicFunction.cosine(1, a, N)
         + a * a * second_order_profile(params, N))
    K = bifurcation_wavenumber(params, b) + wavenumber_correction(params) * a * a
    return P, K


def solve_wave(params: ModelParams, a: float, b: float = 0.0,
               initial_guess: WaveSolution | None = None, *, N: int = DEFAULT_N,
               step: float = 0.01, max_iter: int = 50, a_max: float = A_MAX,
               b_max: float = B_MAX) -> WaveSolution:
    """Periodic wave with first cosine coefficient ``a`` and integration constant ``b``.

    Without an initial guess the branch is continued from the constant state
    in amplitude steps of at most ``step``; the first step is predicted from the
    small-amplitude expansion and later ones by secant extrapolation.
    """
    a, b = float(a), float(b)
    if abs(a) > a_max or abs(b) > b_max:
        raise DomainError(f"(a, b) = ({a}, {b}) outside continuation range "
                          f"|a| <= {a_max}, |b| <= {b_max}")
    if a == 0:
        return constant_state(params, b, N)

    if initial_guess is not None:
        P0 = initial_guess.profile.resized(N)
        P, K, res, its = _newton(params, a, b, P0, initial_guess.wavenumber_alpha, max_iter)
        return _finish(params, a, b, P, K, res, its)

    nsteps = max(1, int(math.ceil(abs(a) / step - 1e-12)))
    amps = np.linspace(0.0, a, nsteps + 1)[1:]
    history = []
    its_total = 0
    for aj in amps:
        if len(history) < 2:
            P0, K0 = expansion_predictor(params, aj, b, N)
        else:
            (a1, P1, K1), (a2, P2, K2) = history[-2], history[-1]
            t = (aj - a2) / (a2 - a1)
            P0 = P2 + t * (P2 - P1)
            K0 = K2 + t * (K2 - K1)
        P, K, res, its = _newton(params, aj, b, P0, K0, max_iter)
        its_total += its
        history.append((aj, P, K))
    return _finish(params, a, b, P, K, res, its_total)


def _finish(params, a, b, P, K, res, its):
    if res > RESIDUAL_TOL:
        raise ContinuationError(f"continuation failed (residual {res:.2e})")
    # symmetrize away round-off sine components
    P = RealPeriodicFunction(P.coeffs.real.astype(complex))
    return WaveSolution(params, a, b, P, float(K), float(res), its)


def _differentiated_residual(w: WaveSolution, dP, dK, db):
    prm = w.params
    P = w.profile
    W = nonlinear_power(P, prm.p)
    T = convolution_matrix(W, P.N)
    r = (-w.wavenumber_alpha * fractional_multiplier(dP, prm.alpha).coeffs
         - dK * fractional_multiplier(P, prm.alpha).coeffs
         - dP.coeffs + (prm.p + 1) * (T @ dP.coeffs))
    r[P.N] -= db
    return float(np.linalg.norm(r))


def family_derivatives(w: WaveSolution, step: float | None = None) -> FamilyDerivatives:
    """Parameter derivatives of ``(P, K)`` from the bordered Jacobian.

    If ``step`` is given, central differences in ``a`` and ``b`` are also
    computed and their largest deviation is stored as ``fd_discrepancy``.
    """
    prm, N = w.params, w.N
    P, K = w.profile, w.wavenumber_alpha
    if w.a == 0:
        Q = P[0].real
        dQ = 1.0 / ((prm.p + 1) * Q ** prm.p - 1)
        dPa = RealPeriodicFunction.cosine(1, 1.0, N)
        dPb = RealPeriodicFunction.constant(dQ, N)
        dKa = 0.0
        dKb = (prm.p + 1) * prm.p * Q ** (prm.p - 1) * dQ
    else:
        J = _bordered_jacobian(prm, P, K)
        rhs = np.zeros((N + 2, 2))
        rhs[N + 1, 0] = 0.5
        rhs[0, 1] = 1.0
        try:
            sol = np.linalg.solve(J, rhs)
        except np.linalg.LinAlgError as exc:
            raise ContinuationError("derivative solve failed") from exc
        if not np.all(np.isfinite(sol)):
            raise ContinuationError("derivative solve failed")
        dPa = _profile_from_cosines(sol[:N + 1, 0])
        dPb = _profile_from_cosines(sol[:N + 1, 1])
        dKa, dKb = float(sol[N + 1, 0]), float(sol[N + 1, 1])
    ra = _differentiated_residual(w, dPa, dKa, 0.0)
    rb = _differentiated_residual(w, dPb, dKb, 1.0)
    fd = None
    if step is not None:
        fd = _fd_discrepancy(w, step, dPa, dPb, dKa, dKb)
    return FamilyDerivatives(dPa, dPb, float(dKa), float(dKb), derivative(P), ra, rb, fd)


def _fd_discrepancy(w, h, dPa, dPb, dKa, dKb):
    prm, N = w.params, w.N
    out = 0.0
    for which, dP, dK in (("a", dPa, dKa), ("b", dPb, dKb)):
        sols = []
        for s in (1, -1):
            a = w.a + s * h if which == "a" else w.a
            b = w.b + s * h if which == "b" else w.b
            sols.append(solve_wave(prm, a, b, N=N))
        fdP = (sols[0].profile - sols[1].profile) * (0.5 / h)
        fdK = (sols[0].wavenumber_alpha - sols[1].wavenumber_alpha) / (2 * h)
        out = max(out, (fdP - dP).norm(), abs(fdK - dK))
    return out


@dataclass
class ExpansionReport:
    params: ModelParams
    amplitudes: list
    profile_errors: list
    wavenumber_errors: list
    profile_order: float
    wavenumber_order: float
    passed: bool


def fitted_order(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.abs(xs)), np.log(np.abs(ys)), 1)[0])


def validate_expansions(params: ModelParams, amplitudes=(0.02, 0.04, 0.08), *,
                        N: int = DEFAULT_N, profile_order_min: float = 2.9,
                        wavenumber_order_min: float = 3.9) -> ExpansionReport:
    """Convergence orders of the two-term expansions of ``P_{a,0}`` and ``K(a,0)``."""
    v2 = second_order_profile(params, N)
    k1 = wavenumber_correction(params)
    e2, ek = [], []
    for a in amplitudes:
        w = solve_wave(params, a, 0.0, N=N)
        approx = RealPeriodicFunction.constant(1.0, N) + RealPeriodicFunction.cosine(1, a, N) + a * a * v2
        e2.append((w.profile - approx).norm())
        ek.append(abs(w.wavenumber_alpha - params.p - k1 * a * a))
    o2 = fitted_order(amplitudes, e2)
    ok = fitted_order(amplitudes, ek)
    return ExpansionReport(params, list(amplitudes), e2, ek, o2, ok,
                           o2 >= profile_order_min and ok >= wavenumber_order_min)
