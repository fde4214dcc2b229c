"""Correlation kernels, their asymptotic sine-kernel approximants, and equilibrium measures.

Conventions
-----------
* GUE: eigenvalues of the ensemble with density proportional to exp(-N tr H^2);
  the limiting density is the semicircle sqrt(2-x^2)/pi on [-sqrt(2), sqrt(2)].
* CUE: eigenangles of a Haar unitary matrix, kernel
  sin(N(x-y)/2) / (2 pi sin((x-y)/2)).
* Chebyshev: the orthogonal polynomial ensemble of omega_0(x) = sqrt(1-x^2)/pi
  on [-1, 1]; its equilibrium measure is the arcsine law.
* Cumulative distribution functions of equilibrium measures are anchored at 0:
  F(x) = int_0^x rho, so F takes values in (-1/2, 1/2) on symmetric supports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import BulkExitError, DomainError
from .orthopoly import (
    OrthonormalBasis,
    WeightId,
    chebyshev_basis,
    hermite_basis,
    hermite_tail,
    phi_batch,
)
from .quadrature import merge_breaks, panel_rule

__all__ = [
    "EquilibriumMeasure",
    "ProjectionKernel",
    "ErrorScan",
    "semicircle",
    "arcsine",
    "gue",
    "cue",
    "chebyshev",
    "generic_cd",
    "sine",
    "cd_kernel",
    "gue_kernel",
    "sine_kernel",
    "cue_kernel",
    "chebyshev_kernel",
    "sine_approx",
    "kernel_error_scan",
]

SQRT2 = math.sqrt(2.0)
_DIAG_SERIES = 1e-8


# ---------------------------------------------------------------------------
# Equilibrium measures


@dataclass(frozen=True, eq=False)
class EquilibriumMeasure:
    """Density, origin-anchored cdf, generalized inverse and bulk interval."""

    name: str
    density: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    bulk: tuple[float, float]

    def in_bulk(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x > self.bulk[0]) & (x < self.bulk[1])))


def _semicircle_density(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(2.0 - x * x, 0.0, None)) / math.pi


def _semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -SQRT2, SQRT2)
    return (x * np.sqrt(np.clip(2.0 - x * x, 0.0, None)) + 2.0 * np.arcsin(x / SQRT2)) / (2.0 * math.pi)


def _semicircle_quantile(q):
    # F(sqrt(2) sin t) = (t + sin(2t)/2)/pi; solve for t by safeguarded Newton
    q = np.clip(np.asarray(q, dtype=float), -0.5, 0.5)
    target = math.pi * q
    lo = np.full_like(target, -0.5 * math.pi)
    hi = np.full_like(target, 0.5 * math.pi)
    t = target / 2.0  # g(t) = t + sin(2t)/2 has slope 2 at the origin
    for _ in range(100):
        g = t + 0.5 * np.sin(2.0 * t) - target
        lo = np.where(g < 0, t, lo)
        hi = np.where(g > 0, t, hi)
        dg = 1.0 + np.cos(2.0 * t)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = g / dg
        nt = t - step
        bad = ~np.isfinite(nt) | (nt <= lo) | (nt >= hi)
        nt = np.where(bad, 0.5 * (lo + hi), nt)
        done = np.abs(nt - t) <= 1e-16 * np.maximum(1.0, np.abs(t))
        t = nt
        if np.all(done):
            break
    return SQRT2 * np.sin(t)


def semicircle() -> EquilibriumMeasure:
    return EquilibriumMeasure(
        name="semicircle",
        density=_semicircle_density,
        cdf=_semicircle_cdf,
        quantile=_semicircle_quantile,
        bulk=(-SQRT2, SQRT2),
    )


def arcsine() -> EquilibriumMeasure:
    return EquilibriumMeasure(
        name="arcsine",
        density=lambda x: 1.0 / (math.pi * np.sqrt(1.0 - np.asarray(x, dtype=float) ** 2)),
        cdf=lambda x: np.arcsin(np.clip(np.asarray(x, dtype=float), -1.0, 1.0)) / math.pi,
        quantile=lambda q: np.sin(math.pi * np.clip(np.asarray(q, dtype=float), -0.5, 0.5)),
        bulk=(-1.0, 1.0),
    )


# ---------------------------------------------------------------------------
# Scalar kernel formulas


def _bcast(*args):
    arrs = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
    for a in arrs:
        if not np.all(np.isfinite(a)):
            raise DomainError("non-finite kernel argument")
    return arrs


def _ret(val, *args):
    return float(val) if all(np.ndim(a) == 0 for a in args) else val


def cd_kernel(basis: OrthonormalBasis, N: int, x, y, delta_switch: float | None = None):
    """Christoffel-Darboux kernel sum_{k<N} phi_k(x) phi_k(y) of ``basis``.

    Off the diagonal (|x-y| > delta_switch) the quotient form
    gamma_{N-1}/gamma_N (phi_N(x) phi_{N-1}(y) - phi_{N-1}(x) phi_N(y))/(x-y)
    is used; closer points use the direct sum.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    if N > basis.n_max:
        raise DomainError(f"rank {N} exceeds basis degree ceiling {basis.n_max}")
    X, Y = _bcast(x, y)
    if delta_switch is None:
        delta_switch = 1e-4 * _domain_scale(basis, N)
    out = np.empty(X.shape)
    near = np.abs(X - Y) <= delta_switch
    if np.any(near):
        rx = basis.phi_batch(N - 1, X[near])
        ry = basis.phi_batch(N - 1, Y[near])
        out[near] = np.sum(rx * ry, axis=0)
    far = ~near
    if np.any(far):
        xs, ys = X[far], Y[far]
        if basis.weight_id is WeightId.HERMITE_FIXED:
            tx = hermite_tail(N, xs, n_max=basis.n_max)
            ty = hermite_tail(N, ys, n_max=basis.n_max)
            px_n, px_m, py_n, py_m = tx[2], tx[1], ty[2], ty[1]
        else:
            rx = basis.phi_batch(N, xs)
            ry = basis.phi_batch(N, ys)
            px_n, px_m, py_n, py_m = rx[N], rx[N - 1], ry[N], ry[N - 1]
        ratio = math.sqrt(basis.b[N])  # gamma_{N-1}/gamma_N
        out[far] = ratio * (px_n * py_m - px_m * py_n) / (xs - ys)
    return _ret(out, x, y)


def _domain_scale(basis: OrthonormalBasis, N: int) -> float:
    if basis.compact:
        return basis.domain[1] - basis.domain[0]
    return 2.0 * math.sqrt(2.0 * N + 1.0)


_HERMITE = None


def _hermite():
    global _HERMITE
    if _HERMITE is None:
        _HERMITE = hermite_basis()
    return _HERMITE


def gue_kernel(N: int, x, y):
    """GUE kernel sqrt(N) K_N(sqrt(N) x, sqrt(N) y) of the Hermite weight.

    The diagonal uses K_N(t, t) = N (phi_{N-1}^2 - sqrt(1-1/N) phi_N phi_{N-2}).
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    X, Y = _bcast(x, y)
    s = math.sqrt(N)
    tx, ty = s * X, s * Y
    out = np.empty(X.shape)
    diag = tx == ty
    if np.any(diag):
        t = hermite_tail(N, tx[diag])
        out[diag] = N * (t[1] ** 2 - math.sqrt(1.0 - 1.0 / N) * t[2] * t[0])
    off = ~diag
    if np.any(off):
        out[off] = cd_kernel(_hermite(), N, tx[off], ty[off])
    return _ret(s * out, x, y)


def sine_kernel(nu: float, xi, zeta):
    """sin(pi nu (xi - zeta)) / (pi (xi - zeta)), with value nu on the diagonal."""
    if not nu > 0:
        raise DomainError("density nu must be positive")
    A, B = _bcast(xi, zeta)
    d = A - B
    small = np.abs(d) < _DIAG_SERIES
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(math.pi * nu * d) / (math.pi * d)
    series = nu * (1.0 - (math.pi * nu * d) ** 2 / 6.0)
    return _ret(np.where(small, series, val), xi, zeta)


def cue_kernel(N: int, x, y):
    """sin(N(x-y)/2) / (2 pi sin((x-y)/2)); diagonal N/(2 pi).

    Periodic in each angle for odd N, anti-periodic for even N (the modulus is
    always periodic).
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    X, Y = _bcast(x, y)
    d = X - Y
    j = np.round(d / (2.0 * math.pi))
    eps = d - 2.0 * math.pi * j
    sign = np.where(((N - 1) * j.astype(np.int64)) % 2 == 0, 1.0, -1.0)
    small = np.abs(eps) < _DIAG_SERIES
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(N * eps / 2.0) / (2.0 * math.pi * np.sin(eps / 2.0))
    series = N / (2.0 * math.pi) * (1.0 - (N * N - 1.0) * eps * eps / 24.0)
    return _ret(sign * np.where(small, series, val), x, y)


def chebyshev_kernel(N: int, x, y):
    """Closed form of the Christoffel-Darboux kernel of omega_0 = sqrt(1-x^2)/pi.

    [sin((N+1)a) sin(N b) - sin((N+1)b) sin(N a)] / (pi (1-x^2)^{1/4} (1-y^2)^{1/4} (x-y))
    with a = arccos x, b = arccos y.  Points closer than 1e-4 use the direct sum.
    """
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    X, Y = _bcast(x, y)
    if np.any(np.abs(X) >= 1.0) or np.any(np.abs(Y) >= 1.0):
        raise DomainError("Chebyshev kernel requires |x|, |y| < 1")
    out = np.empty(X.shape)
    near = np.abs(X - Y) <= 2e-4
    if np.any(near):
        basis = _chebyshev_basis_for(N)
        rx = basis.phi_batch(N - 1, X[near])
        ry = basis.phi_batch(N - 1, Y[near])
        out[near] = np.sum(rx * ry, axis=0)
    far = ~near
    if np.any(far):
        xs, ys = X[far], Y[far]
        a, b = np.arccos(xs), np.arccos(ys)
        num = np.sin((N + 1) * a) * np.sin(N * b) - np.sin((N + 1) * b) * np.sin(N * a)
        den = math.pi * (1.0 - xs * xs) ** 0.25 * (1.0 - ys * ys) ** 0.25 * (xs - ys)
        out[far] = num / den
    return _ret(out, x, y)


_CHEB_CACHE: dict[int, OrthonormalBasis] = {}


def _chebyshev_basis_for(N: int) -> OrthonormalBasis:
    size = max(64, 1 << int(math.ceil(math.log2(N + 2))))
    if size not in _CHEB_CACHE:
        _CHEB_CACHE[size] = chebyshev_basis(size)
    return _CHEB_CACHE[size]


# ---------------------------------------------------------------------------
# ProjectionKernel value objects


@dataclass(frozen=True, eq=False)
class ProjectionKernel:
    """Rank-N correlation kernel (or the infinite-rank sine kernel).

    ``features(x)`` returns an (N, m) real array F with
    K(x_i, x_j) = sum_k F[k, i] F[k, j]; it is what samplers and trace
    quadratures use.
    """

    family: str
    N: int | None = None
    nu: float | None = None
    basis: OrthonormalBasis | None = field(default=None, repr=False)
    domain: tuple[float, float] = (-math.inf, math.inf)

    @property
    def finite_rank(self) -> bool:
        return self.family != "sine"

    @property
    def periodic(self) -> bool:
        return self.family == "cue"

    def __call__(self, x, y):
        if self.family == "gue":
            return gue_kernel(self.N, x, y)
        if self.family == "cue":
            return cue_kernel(self.N, x, y)
        if self.family == "chebyshev":
            return chebyshev_kernel(self.N, x, y)
        if self.family == "generic_cd":
            return cd_kernel(self.basis, self.N, x, y)
        return sine_kernel(self.nu, x, y)

    def diag(self, x):
        return self(x, x)

    def features(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family == "gue":
            return phi_batch(self.N - 1, math.sqrt(self.N) * x) * self.N**0.25
        if self.family == "cue":
            return _fourier_features(self.N, x)
        if self.family == "chebyshev":
            return _chebyshev_basis_for(self.N).phi_batch(self.N - 1, x)
        if self.family == "generic_cd":
            return self.basis.phi_batch(self.N - 1, x)
        raise DomainError("the sine kernel has no finite feature map")

    def matrix(self, x, y=None) -> np.ndarray:
        """Kernel matrix [K(x_i, y_j)] from the feature map (no quotient cancellation)."""
        fx = self.features(x)
        fy = fx if y is None else self.features(y)
        return fx.T @ fy

    def essential_support(self) -> tuple[float, float]:
        """Interval outside of which the kernel is negligible (< 1e-30 relative)."""
        if self.family == "gue":
            L = (math.sqrt(2.0 * self.N + 1.0) + 11.0) / math.sqrt(self.N)
            return (-L, L)
        if self.family == "sine":
            raise DomainError("the sine kernel has no finite essential support")
        return self.domain

    def wavelength(self) -> float:
        """Shortest oscillation length of products K(x,z)K(z,y) in the natural coordinate."""
        if self.family == "gue":
            return 2.0 * math.pi / (2.0 * SQRT2 * self.N + 4.0)
        if self.family == "cue":
            return 2.0 * math.pi / (self.N + 1.0)
        if self.family in ("chebyshev", "generic_cd"):
            return 2.0 * math.pi / (2.0 * self.N + 2.0)
        return 2.0 / self.nu

    def rule(self, lo: float, hi: float, extra_breaks=(), order: int = 32, waves_per_panel: float = 1.5):
        """Composite Gauss-Legendre rule on [lo, hi] resolving the kernel oscillations.

        For kernels on [-1, 1] the rule is built in theta = arccos x, which
        removes the endpoint singularities of the wave functions.
        """
        if not hi > lo:
            raise DomainError("empty integration interval")
        compact_theta = self.family in ("chebyshev", "generic_cd") and math.isfinite(self.domain[0])
        width = waves_per_panel * self.wavelength()
        if compact_theta:
            t_lo, t_hi = math.acos(min(1.0, hi)), math.acos(max(-1.0, lo))
            breaks = [np.arccos(np.clip(np.asarray(extra_breaks, dtype=float), -1, 1))]
            b = merge_breaks(*breaks, lo=t_lo, hi=t_hi)
            b = _subdivide(b, width)
            theta, w = panel_rule(b, order)
            return np.cos(theta), w * np.sin(theta)
        b = merge_breaks(np.asarray(extra_breaks, dtype=float), lo=lo, hi=hi)
        b = _subdivide(b, width)
        return panel_rule(b, order)


def _subdivide(breaks: np.ndarray, width: float) -> np.ndarray:
    out = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((b - a) / width)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


def _fourier_features(N: int, theta: np.ndarray) -> np.ndarray:
    # real orthonormal basis of span{e^{ik theta}: k = -(N-1)/2, ..., (N-1)/2}
    # (half-integer frequencies for even N); reproduces cue_kernel exactly
    theta = np.asarray(theta, dtype=float)
    out = np.empty((N,) + theta.shape)
    inv = 1.0 / math.sqrt(math.pi)
    if N % 2 == 1:
        out[0] = 1.0 / math.sqrt(2.0 * math.pi)
        freqs = np.arange(1, (N - 1) // 2 + 1, dtype=float)
        start = 1
    else:
        freqs = np.arange(N // 2, dtype=float) + 0.5
        start = 0
    ang = freqs.reshape((-1,) + (1,) * theta.ndim) * theta
    m = freqs.size
    out[start : start + m] = inv * np.cos(ang)
    out[start + m : start + 2 * m] = inv * np.sin(ang)
    return out


def gue(N: int) -> ProjectionKernel:
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    return ProjectionKernel(family="gue", N=int(N), domain=(-math.inf, math.inf))


def cue(N: int) -> ProjectionKernel:
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    return ProjectionKernel(family="cue", N=int(N), domain=(0.0, 2.0 * math.pi))


def chebyshev(N: int) -> ProjectionKernel:
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    return ProjectionKernel(family="chebyshev", N=int(N), domain=(-1.0, 1.0))


def generic_cd(basis: OrthonormalBasis, N: int) -> ProjectionKernel:
    if int(N) != N or N < 1 or N > basis.n_max:
        raise DomainError("rank must be between 1 and the basis degree ceiling")
    return ProjectionKernel(family="generic_cd", N=int(N), basis=basis, domain=basis.domain)


def sine(nu: float) -> ProjectionKernel:
    if not nu > 0:
        raise DomainError("density nu must be positive")
    return ProjectionKernel(family="sine", nu=float(nu))


# ---------------------------------------------------------------------------
# Mesoscopic sine approximation and error scans


def sine_approx(measure: EquilibriumMeasure, N: int, alpha: float, x0: float, xi, zeta):
    """sin(pi N (F(x0 + xi N^-a) - F(x0 + zeta N^-a))) / (pi (xi - zeta)).

    Diagonal limit N^{1-a} rho(x0 + xi N^-a).
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError("alpha must lie in (0, 1]")
    A, B = _bcast(xi, zeta)
    s = float(N) ** (-alpha)
    u, v = x0 + A * s, x0 + B * s
    if not (measure.in_bulk(u) and measure.in_bulk(v) and measure.in_bulk(x0)):
        raise BulkExitError(f"window around x0={x0} leaves the bulk {measure.bulk}")
    d = A - B
    small = np.abs(d) < _DIAG_SERIES
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(math.pi * N * (measure.cdf(u) - measure.cdf(v))) / (math.pi * d)
    diag = float(N) ** (1.0 - alpha) * measure.density(u)
    return _ret(np.where(small, diag, val), xi, zeta)


@dataclass(frozen=True)
class ErrorScan:
    family: str
    alpha: float
    x0: float
    L: float
    N_list: tuple[int, ...]
    errors: tuple[float, ...]
    slope: float
    intercept: float


_SCAN_FAMILIES = {"gue": (gue, semicircle), "chebyshev": (chebyshev, arcsine)}


def kernel_error_scan(family: str, alpha: float, x0: float, L: float, N_list, grid: int = 41) -> ErrorScan:
    """Sup-error of N^-a K_N(x0 + xi N^-a, x0 + zeta N^-a) against :func:`sine_approx`.

    The sup runs over a ``grid`` x ``grid`` lattice of [-L, L]^2; the slope is
    the least-squares fit of log error against log N.
    """
    if family not in _SCAN_FAMILIES:
        raise DomainError(f"family must be one of {sorted(_SCAN_FAMILIES)}")
    N_list = tuple(int(n) for n in N_list)
    if len(N_list) < 3 or any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise DomainError("N_list must be ascending with at least three entries")
    make_kernel, make_measure = _SCAN_FAMILIES[family]
    measure = make_measure()
    g = np.linspace(-L, L, int(grid))
    XI, ZE = np.meshgrid(g, g, indexing="ij")
    errors = []
    for N in N_list:
        s = float(N) ** (-alpha)
        if not measure.in_bulk(np.array([x0 - L * s, x0 + L * s])):
            raise BulkExitError(f"window x0 +- L N^-alpha leaves the bulk at N={N}")
        K = make_kernel(N).matrix(x0 + g * s) * s
        approx = sine_approx(measure, N, alpha, x0, XI, ZE)
        errors.append(float(np.max(np.abs(K - approx))))
    slope, intercept = np.polyfit(np.log(N_list), np.log(errors), 1)
    return ErrorScan(
        family=family,
        alpha=float(alpha),
        x0=float(x0),
        L=float(L),
        N_list=N_list,
        errors=tuple(errors),
        slope=float(slope),
        intercept=float(intercept),
    )
