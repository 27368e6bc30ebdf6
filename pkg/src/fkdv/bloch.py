"""Bloch operators of the linearization about a periodic wave and their spectra.

For Bloch frequency ``xi`` the operator acts on mode ``n`` through the shifted
wavenumber ``n + xi``::

    L[n, m] = (K |n + xi|^alpha + 1) delta_nm - (p + 1) W_hat(n - m),  W = P^p
    M = diag(i (n + xi)) L

``L`` is Hermitian, ``M`` is the Bloch symbol of ``d/dz L``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .errors import EigenSolverError
from .torus import RealPeriodicFunction, convolution_matrix, nonlinear_power
from .waves import ModelParams, WaveSolution, solve_wave

TOL_STABLE = 1e-7
TOL_UNSTABLE = 1e-6
KREIN_AXIS_TOL = 1e-8
KREIN_ZERO_TOL = 1e-8
SIMPLE_GAP = 1e-6
CONVERGENCE_N = 48
# real parts below this multiple of eps*|lambda| are backward-error noise
ROUNDOFF_FACTOR = 64.0


def dispersion_omega(params: ModelParams, k):
    """Linear dispersion ``omega(k) = k p (|k|^alpha - 1)`` about the constant state."""
    k = np.asarray(k, dtype=float)
    return k * params.p * (np.abs(k) ** params.alpha - 1)


@dataclass(frozen=True)
class BlochMatrix:
    xi: float
    M: np.ndarray
    L: np.ndarray
    source: WaveSolution
    wavenumbers: np.ndarray

    def factorization_defect(self) -> float:
        D = 1j * self.wavenumbers
        return float(np.max(np.abs(self.M - D[:, None] * self.L)))

    def hermitian_defect(self) -> float:
        return float(np.linalg.norm(self.L - self.L.conj().T) / max(np.linalg.norm(self.L), 1e-300))


@dataclass
class SpectrumSlice:
    xi: float
    eigenvalues: np.ndarray
    krein: np.ndarray | None = None
    max_real_part: float = 0.0
    skipped_clusters: int = 0
    structured: bool = False


@dataclass
class StabilityVerdict:
    classification: str
    growth_rate: float
    worst_xi: float
    slices: list = field(default_factory=list, repr=False)
    converged: bool | None = None
    growth_rate_refined_N: float | None = None


def _operator_matrices(w: WaveSolution, kappa: np.ndarray, W_lookup) -> tuple:
    prm = w.params
    diag = w.wavenumber_alpha * np.abs(kappa) ** prm.alpha + 1.0
    L = np.diag(diag).astype(complex) - (prm.p + 1) * W_lookup
    L = 0.5 * (L + L.conj().T)
    M = (1j * kappa)[:, None] * L
    return M, L


def _potential(w: WaveSolution):
    """``P^p``; exact for the constant state, where the FFT would leave roundoff off the mean."""
    if w.a == 0:
        return RealPeriodicFunction.constant(w.profile[0].real ** w.params.p, w.N)
    return nonlinear_power(w.profile, w.params.p)


def assemble_bloch(w: WaveSolution, xi: float, N: int | None = None) -> BlochMatrix:
    """Truncated Bloch matrices ``(M, L)`` on modes ``|n| <= N``."""
    if N is None:
        N = w.N
    T = convolution_matrix(_potential(w), N)
    kappa = np.arange(-N, N + 1) + float(xi)
    M, L = _operator_matrices(w, kappa, T)
    return BlochMatrix(float(xi), M, L, w, kappa)


def _parity_blocks(L: np.ndarray, N: int):
    """Real even/odd blocks of a reflection-symmetric ``L`` on modes ``-N..N``."""
    s2 = math.sqrt(0.5)
    Uc = np.zeros((2 * N + 1, N + 1), dtype=complex)
    Us = np.zeros((2 * N + 1, N), dtype=complex)
    Uc[N, 0] = 1.0
    for n in range(1, N + 1):
        Uc[N + n, n] = Uc[N - n, n] = s2
        Us[N + n, n - 1] = -1j * s2
        Us[N - n, n - 1] = 1j * s2
    Le = Uc.conj().T @ L @ Uc
    Lo = Us.conj().T @ L @ Us
    cross = Uc.conj().T @ L @ Us
    return Uc, Us, Le, Lo, cross


def _structured_zero_xi(bm: BlochMatrix, with_vectors: bool):
    """Spectrum at ``xi = 0`` using reflection symmetry of an even wave.

    ``M`` swaps cosine and sine subspaces, so its nonzero eigenvalues are
    ``+-sqrt(-nu)`` with ``nu`` the eigenvalues of ``G Lo`` (``G`` built from the
    cosine block).  When ``Lo`` is positive semidefinite this is the spectrum
    of the symmetric matrix ``R G R^T`` with ``Lo = R^T R``, so eigenvalues on
    the imaginary axis stay there and the translational Jordan block at zero
    is resolved exactly.  Returns ``None`` when the structure is absent.
    """
    L = bm.L
    N = (L.shape[0] - 1) // 2
    scale = max(1.0, float(np.max(np.abs(L))))
    Uc, Us, Le, Lo, cross = _parity_blocks(L, N)
    if (np.max(np.abs(cross)) > 1e-10 * scale or np.max(np.abs(Le.imag)) > 1e-10 * scale
            or np.max(np.abs(Lo.imag)) > 1e-10 * scale):
        return None
    Le, Lo = Le.real, Lo.real
    s, V = np.linalg.eigh(0.5 * (Lo + Lo.T))
    ktol = 1e-10 * max(1.0, float(np.max(np.abs(s))))
    if s.min() < -ktol:
        return None
    s = np.where(s <= ktol, 0.0, s)
    R = np.sqrt(s)[:, None] * V.T
    nvec = np.arange(1, N + 1, dtype=float)
    G = nvec[:, None] * Le[1:, 1:] * nvec[None, :]
    H = R @ G @ R.T
    nu, Z = np.linalg.eigh(0.5 * (H + H.T))
    lams = [0j]
    vecs = [None]
    for j, v in enumerate(nu):
        root = complex(np.sqrt(complex(-v)))
        for sign in (1, -1):
            lam = sign * root
            lams.append(lam)
            if with_vectors and root != 0:
                vo = G @ (R.T @ Z[:, j])
                ve = np.concatenate([[0.0], nvec * (Lo @ vo)]) / lam
                x = Uc @ ve + Us @ vo
                vecs.append(x / np.linalg.norm(x))
            else:
                vecs.append(None)
    return np.array(lams), vecs


def _eig(M: np.ndarray, with_vectors: bool):
    try:
        if with_vectors:
            lam, V = sla.eig(M)
            return lam, [V[:, j] for j in range(V.shape[1])]
        return sla.eigvals(M), None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError("QR iteration failed") from exc


def dense_eigenvalues(M: np.ndarray) -> np.ndarray:
    """Eigenvalues of a general complex matrix (LAPACK Hessenberg/QR)."""
    return _eig(np.asarray(M, dtype=complex), False)[0]


def _krein(bm: BlochMatrix, lam, vecs):
    sig = np.zeros(lam.size)
    skipped = 0
    for j, l in enumerate(lam):
        others = np.delete(lam, j)
        if vecs[j] is None or (others.size and np.min(np.abs(others - l)) < SIMPLE_GAP):
            sig[j] = np.nan
            skipped += 1
            continue
        if abs(l.real) > KREIN_AXIS_TOL:
            sig[j] = np.nan
            continue
        v = vecs[j] / np.linalg.norm(vecs[j])
        q = np.vdot(v, bm.L @ v).real
        sig[j] = 0.0 if abs(q) <= KREIN_ZERO_TOL else math.copysign(1.0, q)
    return sig, skipped


def slice_spectrum(bm: BlochMatrix, with_krein: bool = False,
                   structured: bool = True) -> SpectrumSlice:
    """Eigenvalues of the Bloch matrix, optionally with Krein signatures.

    At ``xi = 0`` the reflection-symmetric solver is used when applicable;
    otherwise LAPACK's Hessenberg/shifted-QR eigensolver.
    """
    res = None
    if structured and bm.xi == 0.0:
        res = _structured_zero_xi(bm, with_krein)
    used_structure = res is not None
    if res is None:
        res = _eig(bm.M, with_krein)
    lam, vecs = res
    if not np.all(np.isfinite(lam)):
        raise EigenSolverError("QR iteration failed")
    order = np.lexsort((lam.real, lam.imag))
    lam = lam[order]
    krein = None
    skipped = 0
    if with_krein:
        vecs = [vecs[j] for j in order]
        krein, skipped = _krein(bm, lam, vecs)
    return SpectrumSlice(bm.xi, lam, krein, significant_growth(lam), skipped, used_structure)


def significant_growth(lam: np.ndarray) -> float:
    """Largest real part after discarding those at roundoff level for their modulus.

    High Fourier modes have ``|lambda| ~ K N^(alpha+1)``, so an unstructured
    eigensolver leaves real parts of order ``eps |lambda|`` on them.
    """
    floor = ROUNDOFF_FACTOR * np.finfo(float).eps * np.abs(lam)
    re = np.where(np.abs(lam.real) <= floor, 0.0, lam.real)
    return float(np.max(re))


def default_xi_grid(count: int = 64, refine: bool = True) -> np.ndarray:
    grid = np.linspace(0.0, 0.5, count)
    if refine:
        grid = np.concatenate([grid, 1e-4 * 2.0 ** np.arange(8)])
    return np.unique(grid)


def _growth(w, xi, N):
    return slice_spectrum(assemble_bloch(w, xi, N)).max_real_part


def classify(growth: float, tol_stable=TOL_STABLE, tol_unstable=TOL_UNSTABLE) -> str:
    if growth <= tol_stable:
        return "stable"
    if growth >= tol_unstable:
        return "unstable"
    return "indeterminate"


def stability_sweep(w: WaveSolution, xi_grid=None, N: int | None = None, *,
                    tol_stable: float = TOL_STABLE, tol_unstable: float = TOL_UNSTABLE,
                    refine: bool = True, convergence_check: bool = True,
                    threads: int = 1) -> StabilityVerdict:
    """Maximal real part of the Bloch spectrum over ``xi`` in ``[0, 1/2]``.

    When growth is detected the worst grid point is refined by a bounded
    scalar maximization between its neighbours, and the result is re-checked
    at ``N = 48``.
    """
    if N is None:
        N = w.N
    grid = default_xi_grid() if xi_grid is None else np.unique(np.asarray(xi_grid, float))
    if np.any(grid < 0) or np.any(grid > 0.5):
        raise ValueError("xi grid must lie in [0, 1/2]")

    def one(xi):
        return slice_spectrum(assemble_bloch(w, xi, N))

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            slices = list(ex.map(one, grid))
    else:
        slices = [one(x) for x in grid]
    growth = np.array([s.max_real_part for s in slices])
    i = int(np.argmax(growth))
    worst_xi, rate = float(grid[i]), float(growth[i])

    if refine and rate > tol_stable and grid.size > 1:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        if hi > lo:
            opt = minimize_scalar(lambda x: -_growth(w, x, N), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-6 * max(hi, 1e-4)})
            if -opt.fun > rate:
                rate, worst_xi = float(-opt.fun), float(opt.x)

    verdict = StabilityVerdict(classify(rate, tol_stable, tol_unstable), rate, worst_xi, slices)
    if convergence_check and verdict.classification == "unstable" and N < CONVERGENCE_N:
        w_big = solve_wave(w.params, w.a, w.b, initial_guess=w, N=CONVERGENCE_N)
        rate_big = _growth(w_big, worst_xi, CONVERGENCE_N)
        verdict.growth_rate_refined_N = rate_big
        verdict.converged = abs(rate_big - rate) <= 0.1 * abs(rate)
        if not verdict.converged:
            verdict.classification = "indeterminate"
    return verdict


def match_spectra(A, B):
    """Optimal one-to-one matching; returns the largest matched distance."""
    A, B = np.asarray(A), np.asarray(B)
    if A.size != B.size:
        return math.inf
    C = np.abs(A[:, None] - B[None, :])
    r, c = linear_sum_assignment(C)
    return float(C[r, c].max()) if A.size else 0.0


def hausdorff(A, B) -> float:
    A, B = np.asarray(A), np.asarray(B)
    C = np.abs(A[:, None] - B[None, :])
    return float(max(C.min(axis=1).max(), C.min(axis=0).max()))


def periodic_extension_matrices(w: WaveSolution, n_periods: int, N: int | None = None):
    """Linearization on the ``2 pi n``-periodic torus, assembled in its own Fourier basis.

    Modes are ``kappa_j = j / n`` for the union of the Bloch mode sets
    ``m + r/n`` (``|m| <= N``, ``-n/2 <= r < n/2``), so truncations agree.
    """
    if N is None:
        N = w.N
    n = int(n_periods)
    rs = [r for r in range(-(n // 2), (n + 1) // 2) if -n / 2 <= r < n / 2]
    js = np.sort(np.array([m * n + r for m in range(-N, N + 1) for r in rs]))
    kappa = js / n
    W = _potential(w).resized(2 * N).coeffs
    dj = js[:, None] - js[None, :]
    big = np.zeros(dj.shape, dtype=complex)
    hit = dj % n == 0
    big[hit] = W[dj[hit] // n + 2 * N]
    return _operator_matrices(w, kappa, big), [r / n for r in rs]


@dataclass
class OracleReport:
    n_periods: int
    hausdorff: float
    matched: float
    passed: bool
    tol: float


def block_oracle(w: WaveSolution, n_periods: int, N: int | None = None,
                 tol: float = 1e-7) -> OracleReport:
    """Compare the ``n``-period spectrum with the union of Bloch spectra at ``xi = r/n``."""
    if not 1 <= n_periods <= 8:
        raise ValueError("n_periods must lie in 1..8")
    if N is None:
        N = w.N
    (M, _), xis = periodic_extension_matrices(w, n_periods, N)
    if n_periods == 1:
        big = slice_spectrum(assemble_bloch(w, 0.0, N)).eigenvalues
    else:
        big, _ = _eig(M, False)
    union = np.concatenate([slice_spectrum(assemble_bloch(w, x, N)).eigenvalues for x in xis])
    h = hausdorff(big, union)
    m = match_spectra(big, union)
    return OracleReport(n_periods, h, m, h <= tol, tol)


@dataclass
class SymmetryReport:
    xi: float
    conjugate: float
    negation: float
    axis_reflection: float
    amplitude_flip: float
    passed: bool
    tol: float


def symmetry_check(w: WaveSolution, xi: float, tol: float = 1e-9,
                   w_flipped: WaveSolution | None = None) -> SymmetryReport:
    """Spectral symmetries under ``xi -> -xi``, reflection and ``a -> -a``."""
    N = w.N
    s_pos = slice_spectrum(assemble_bloch(w, xi, N)).eigenvalues
    s_neg = slice_spectrum(assemble_bloch(w, -xi, N)).eigenvalues
    conj = match_spectra(s_pos, np.conj(s_neg))
    neg = match_spectra(s_pos, -s_neg)
    axis = match_spectra(s_pos, -np.conj(s_pos))
    if w_flipped is None:
        w_flipped = solve_wave(w.params, -w.a, w.b, N=N)
    s_flip = slice_spectrum(assemble_bloch(w_flipped, xi, N)).eigenvalues
    flip = match_spectra(s_pos, s_flip)
    worst = max(conj, neg, axis, flip)
    return SymmetryReport(float(xi), conj, neg, axis, flip, worst <= tol, tol)
