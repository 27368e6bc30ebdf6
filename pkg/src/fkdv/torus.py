"""Fourier-side calculus on the 2*pi torus.

Functions are stored as complex coefficient vectors ``c[n + N]`` for
``n = -N..N``.  Real functions carry Hermitian symmetry.  All operators are
Fourier multipliers except :func:`nonlinear_power`, which goes through a
zero-padded collocation grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import binom

from .errors import DomainError

DEFAULT_N = 32
POSITIVITY_FLOOR = 1e-10


@dataclass(frozen=True)
class RealPeriodicFunction:
    """Truncated Fourier series ``sum_{|n|<=N} c_n e^{inz}`` of a real function."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 != 1:
            raise ValueError("coefficient vector must have odd length 2N+1")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.N:
            return 0j
        return complex(self.coeffs[n + self.N])

    @classmethod
    def from_modes(cls, modes: dict, N: int = DEFAULT_N) -> "RealPeriodicFunction":
        """Build from ``{n: c_n}``; the conjugate mode ``-n`` is filled in."""
        c = np.zeros(2 * N + 1, dtype=complex)
        for n, v in modes.items():
            c[n + N] = v
            c[-n + N] = np.conj(v)
        return cls(c)

    @classmethod
    def constant(cls, value: float, N: int = DEFAULT_N) -> "RealPeriodicFunction":
        return cls.from_modes({0: value}, N)

    @classmethod
    def cosine(cls, n: int, amp: float = 1.0, N: int = DEFAULT_N):
        return cls.from_modes({n: amp / 2}, N)

    @classmethod
    def sine(cls, n: int, amp: float = 1.0, N: int = DEFAULT_N):
        return cls.from_modes({n: amp / 2j}, N)

    @classmethod
    def from_samples(cls, values, N: int) -> "RealPeriodicFunction":
        """Truncate grid samples on ``z_j = 2*pi*j/M`` to ``N`` modes."""
        values = np.asarray(values, dtype=float)
        M = values.size
        if M < 2 * N + 1:
            raise ValueError("grid too coarse for requested truncation")
        hat = np.fft.fft(values) / M
        n = np.arange(-N, N + 1)
        return cls(hat[n % M])

    def resized(self, N: int) -> "RealPeriodicFunction":
        """Zero-pad or truncate to ``N`` modes."""
        c = np.zeros(2 * N + 1, dtype=complex)
        m = min(N, self.N)
        c[N - m:N + m + 1] = self.coeffs[self.N - m:self.N + m + 1]
        return RealPeriodicFunction(c)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        vals = np.exp(1j * np.multiply.outer(z, self.modes)) @ self.coeffs
        return vals.real

    def samples(self, M: int) -> np.ndarray:
        """Values on the uniform grid of ``M >= 2N+1`` points."""
        if M < 2 * self.N + 1:
            raise ValueError("grid too coarse for this function")
        full = np.zeros(M, dtype=complex)
        full[self.modes % M] = self.coeffs
        return (np.fft.ifft(full) * M).real

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1]))))

    def sine_defect(self) -> float:
        """Size of the odd part; zero for even functions."""
        return float(np.max(np.abs(self.coeffs.imag)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __mul__(self, s: float):
        return RealPeriodicFunction(self.coeffs * s)

    __rmul__ = __mul__

    def __neg__(self):
        return RealPeriodicFunction(-self.coeffs)


def _combine(f, g, sign):
    if not isinstance(g, RealPeriodicFunction):
        g = RealPeriodicFunction.constant(float(g), f.N)
    N = max(f.N, g.N)
    return RealPeriodicFunction(f.resized(N).coeffs + sign * g.resized(N).coeffs)


def _multiply(f: RealPeriodicFunction, symbol: np.ndarray) -> RealPeriodicFunction:
    return RealPeriodicFunction(f.coeffs * symbol)


def fractional_multiplier(f: RealPeriodicFunction, s: float) -> RealPeriodicFunction:
    """Apply ``Lambda^s``, the multiplier ``|n|^s``.

    ``s = 0`` is the identity; for ``s > 0`` the mean is annihilated.
    """
    s = float(s)
    if not math.isfinite(s) or s < 0:
        raise DomainError("fractional_multiplier needs finite s >= 0; use fractional_inverse")
    if s == 0:
        return f
    return _multiply(f, np.abs(f.modes).astype(float) ** s)


def fractional_inverse(f: RealPeriodicFunction, s: float) -> RealPeriodicFunction:
    """Apply ``Lambda^{-s}`` on the mean-zero subspace."""
    if s <= 0:
        raise DomainError("fractional_inverse needs s > 0")
    scale = max(1.0, float(np.abs(f.coeffs).sum()))
    if abs(f[0]) > 1e-14 * scale:
        raise DomainError("Lambda^{-s} undefined off the mean-zero subspace")
    n = np.abs(f.modes).astype(float)
    sym = np.zeros_like(n)
    sym[n > 0] = n[n > 0] ** (-float(s))
    return _multiply(f, sym)


def project_mean_zero(f: RealPeriodicFunction) -> RealPeriodicFunction:
    c = f.coeffs.copy()
    c[f.N] = 0
    return RealPeriodicFunction(c)


def derivative(f: RealPeriodicFunction, order: int = 1) -> RealPeriodicFunction:
    return _multiply(f, (1j * f.modes) ** order)


def hilbert_transform(f: RealPeriodicFunction) -> RealPeriodicFunction:
    """Multiplier ``-i sgn(n)``, so that ``Lambda = H d/dz``."""
    return _multiply(f, -1j * np.sign(f.modes))


def dealias_grid_size(N: int, q: float) -> int:
    return int(math.ceil((q + 1) * (2 * N + 1)))


def nonlinear_power(f: RealPeriodicFunction, q: float) -> RealPeriodicFunction:
    """Truncation of ``f(z)**q`` computed on a zero-padded grid.

    Integer ``q`` is exact (no aliasing into retained modes).  Non-integer
    ``q`` requires ``f > 0`` on the grid and is evaluated as ``exp(q log f)``.
    """
    q = float(q)
    if q < 0:
        raise DomainError("nonlinear_power needs q >= 0")
    M = dealias_grid_size(f.N, q)
    vals = f.samples(M)
    if q.is_integer():
        out = vals ** int(q)
    else:
        if np.min(vals) <= POSITIVITY_FLOOR:
            raise DomainError("fractional power of non-positive profile")
        out = np.exp(q * np.log(vals))
    return RealPeriodicFunction.from_samples(out, f.N)


def convolution_matrix(f: RealPeriodicFunction, N: int | None = None) -> np.ndarray:
    """Toeplitz matrix ``T[n, m] = f_hat(n - m)`` for ``n, m`` in ``[-N, N]``."""
    if N is None:
        N = f.N
    n = np.arange(-N, N + 1)
    diff = n[:, None] - n[None, :]
    c = f.resized(2 * N).coeffs
    return c[diff + 2 * N]


def parseval_gap(f: RealPeriodicFunction) -> float:
    """Relative gap between ``sum |c_n|^2`` and the grid mean of ``f^2``."""
    vals = f.samples(2 * f.N + 1)
    lhs = float(np.sum(np.abs(f.coeffs) ** 2))
    rhs = float(np.mean(vals ** 2))
    return abs(lhs - rhs) / max(lhs, 1e-300)


@dataclass(frozen=True)
class SymbolExpansion:
    """Power series in the Bloch frequency for ``(k + xi)|k + xi|^alpha``.

    Each term is ``(order, coefficient, kind)``; ``kind`` is ``"odd"`` for
    multipliers ``|k|^{alpha - order + 1}`` and ``"even"`` for
    ``k |k|^{alpha - order}``.  The mean mode is not covered by the series and
    is handled by :meth:`mean_mode_symbol`.
    """

    alpha: float
    xi: float
    terms: tuple = field(default_factory=tuple)
    mean_mode_separate: bool = True

    def multiplier(self, order: int, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        a = self.alpha
        if order % 2 == 1:
            return np.abs(k) ** (a - (order - 1))
        return k * np.abs(k) ** (a - order)

    def partial_sum(self, k, max_order: int | None = None) -> np.ndarray:
        """Real symbol ``(k+xi)|k+xi|^alpha`` truncated after ``max_order``."""
        k = np.asarray(k, dtype=float)
        if np.any(k == 0):
            raise DomainError("series is valid only for k != 0")
        total = k * np.abs(k) ** self.alpha
        for order, coef, _ in self.terms:
            if max_order is not None and order > max_order:
                break
            total = total + coef * self.multiplier(order, k) * self.xi ** order
        return total

    def mean_mode_symbol(self) -> complex:
        """Symbol ``i xi |xi|^alpha`` acting on the mean."""
        return 1j * self.xi * abs(self.xi) ** self.alpha

    def apply(self, f: RealPeriodicFunction, max_order: int | None = None) -> np.ndarray:
        """Coefficients of ``e^{-i xi z} d/dz Lambda^alpha e^{i xi z} f`` from the series."""
        n = f.modes
        out = np.zeros_like(f.coeffs)
        nz = n != 0
        out[nz] = 1j * self.partial_sum(n[nz], max_order) * f.coeffs[nz]
        out[~nz] = self.mean_mode_symbol() * f.coeffs[~nz]
        return out


def bloch_symbol_terms(alpha: float, xi: float, max_order: int) -> SymbolExpansion:
    """Expansion of the Bloch-shifted ``d/dz Lambda^alpha`` in powers of ``xi``.

    Coefficients are the generalized binomials ``C(alpha + 1, m)``.
    """
    if abs(xi) >= 1:
        raise DomainError("|xi| must be below 1")
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    terms = []
    for m in range(1, max_order + 1):
        coef = float(binom(alpha + 1, m))
        terms.append((m, coef, "odd" if m % 2 else "even"))
    return SymbolExpansion(alpha=float(alpha), xi=float(xi), terms=tuple(terms))
