"""Orthonormal wave functions and their Plancherel-Rotach approximants.

A wave function is an orthonormal polynomial multiplied by the square root of
its weight, phi_k(x) = sqrt(w(x)) * gamma_k * pi_k(x), so that
``int phi_j phi_k dx = delta_jk``.  Only the damped functions are ever
evaluated; raw polynomials overflow long before the degrees used here.

Three weights are supported:

* ``hermite_fixed``   w(x) = exp(-x^2) on the real line,
* ``chebyshev_u``     w(x) = sqrt(1-x^2)/pi on [-1, 1],
* ``jacobi_modified`` w(x) = h(x) (1-x)^g_minus (1+x)^g_plus on [-1, 1], with
  recurrence coefficients built numerically by a discretized Stieltjes
  procedure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numba
import numpy as np

from .errors import DiscretizationError, DomainError
from .quadrature import panel_rule, uniform_panels

__all__ = [
    "WeightId",
    "OrthonormalBasis",
    "PRApproximant",
    "HERMITE_N_MAX",
    "hermite_basis",
    "chebyshev_basis",
    "jacobi_modified_basis",
    "hermite_phi",
    "hermite_tail",
    "phi_batch",
    "chebyshev_u",
    "stieltjes_recurrence",
    "pr_H",
    "pr_varphi",
    "pr_phase",
    "pr_eta",
    "pr_lambda",
    "pr_lambda_tilde",
    "pr_approximant",
    "pr_asymptotic",
]

HERMITE_N_MAX = 100_000

_LOG_PI_QUARTER = 0.25 * math.log(math.pi)
# Below this value of x^2/2 the starting value exp(-x^2/2) is a normal double
# and the recurrence never leaves [-1, 1]; above it a log offset is carried.
_DIRECT_LIMIT = 650.0
_RESCALE_EXP = 600
_RESCALE = 2.0**_RESCALE_EXP
_LN2 = math.log(2.0)


class WeightId(str, Enum):
    HERMITE_FIXED = "hermite_fixed"
    CHEBYSHEV_U = "chebyshev_u"
    JACOBI_MODIFIED = "jacobi_modified"


# ---------------------------------------------------------------------------
# Hermite recurrence kernels


@numba.njit(cache=True, nogil=True)
def _hermite_rows_kernel(n, x, out):
    # out has shape (n+1, m); row k receives phi_k(x)
    m = x.shape[0]
    for j in range(m):
        xj = x[j]
        half_sq = 0.5 * xj * xj
        if half_sq < _DIRECT_LIMIT:
            p_prev = 0.0
            p = math.exp(-half_sq - _LOG_PI_QUARTER)
            out[0, j] = p
            for k in range(n):
                p_next = xj * math.sqrt(2.0 / (k + 1)) * p - math.sqrt(k / (k + 1.0)) * p_prev
                p_prev = p
                p = p_next
                out[k + 1, j] = p
        else:
            p_prev = 0.0
            p = 1.0
            log_off = -half_sq - _LOG_PI_QUARTER
            out[0, j] = math.exp(log_off)
            for k in range(n):
                p_next = xj * math.sqrt(2.0 / (k + 1)) * p - math.sqrt(k / (k + 1.0)) * p_prev
                p_prev = p
                p = p_next
                if abs(p) > _RESCALE:
                    p = p / _RESCALE
                    p_prev = p_prev / _RESCALE
                    log_off += _RESCALE_EXP * _LN2
                out[k + 1, j] = _scaled(p, log_off)


@numba.njit(cache=True, nogil=True)
def _scaled(p, log_off):
    if p == 0.0:
        return 0.0
    v = math.log(abs(p)) + log_off
    if v < -745.0:
        return 0.0
    r = math.exp(v)
    return r if p > 0 else -r


@numba.njit(cache=True, nogil=True)
def _hermite_tail_kernel(n, x, out):
    # out has shape (3, m): phi_{n-2}, phi_{n-1}, phi_n (zero for negative index)
    m = x.shape[0]
    for j in range(m):
        xj = x[j]
        half_sq = 0.5 * xj * xj
        direct = half_sq < _DIRECT_LIMIT
        p_prev = 0.0
        if direct:
            p = math.exp(-half_sq - _LOG_PI_QUARTER)
            log_off = 0.0
        else:
            p = 1.0
            log_off = -half_sq - _LOG_PI_QUARTER
        q2 = 0.0  # phi_{k-2} in the same scale as p
        for k in range(n):
            p_next = xj * math.sqrt(2.0 / (k + 1)) * p - math.sqrt(k / (k + 1.0)) * p_prev
            q2 = p_prev
            p_prev = p
            p = p_next
            if (not direct) and abs(p) > _RESCALE:
                p = p / _RESCALE
                p_prev = p_prev / _RESCALE
                q2 = q2 / _RESCALE
                log_off += _RESCALE_EXP * _LN2
        if direct:
            out[0, j] = q2
            out[1, j] = p_prev
            out[2, j] = p
        else:
            out[0, j] = _scaled(q2, log_off)
            out[1, j] = _scaled(p_prev, log_off)
            out[2, j] = _scaled(p, log_off)
        if n == 0:
            out[0, j] = 0.0
            out[1, j] = 0.0
        elif n == 1:
            out[0, j] = 0.0


def _as_finite_array(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite evaluation point")
    return arr


def _check_degree(k: int, n_max: int) -> int:
    if int(k) != k or k < 0:
        raise DomainError(f"degree must be a non-negative integer, got {k!r}")
    if k > n_max:
        raise DomainError(f"degree {k} exceeds the configured ceiling n_max={n_max}")
    return int(k)


def _hermite_rows(n: int, x: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(x, dtype=float).ravel()
    out = np.empty((n + 1, flat.size))
    _hermite_rows_kernel(n, flat, out)
    return out.reshape((n + 1,) + x.shape)


def hermite_phi(k: int, x, n_max: int = HERMITE_N_MAX):
    """Orthonormal Hermite wave function phi_k(x) for the weight exp(-x^2).

    Uses the normalized upward recurrence
    ``phi_{k+1} = x sqrt(2/(k+1)) phi_k - sqrt(k/(k+1)) phi_{k-1}``
    started at ``phi_0 = pi^{-1/4} exp(-x^2/2)``.  Scalar in, scalar out.
    """
    k = _check_degree(k, n_max)
    arr = _as_finite_array(x)
    val = hermite_tail(k, arr, n_max=n_max)[2]
    return float(val) if np.ndim(x) == 0 else val


def hermite_tail(n: int, x, n_max: int = HERMITE_N_MAX) -> np.ndarray:
    """Return the stacked array (phi_{n-2}(x), phi_{n-1}(x), phi_n(x)).

    Entries with negative index are zero.  Values are bitwise identical to the
    corresponding rows of :func:`phi_batch`.
    """
    n = _check_degree(n, n_max)
    arr = _as_finite_array(x)
    flat = np.ascontiguousarray(arr).ravel()
    out = np.empty((3, flat.size))
    _hermite_tail_kernel(n, flat, out)
    return out.reshape((3,) + arr.shape)


# ---------------------------------------------------------------------------
# Basis objects


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Weight descriptor plus three-term recurrence of the monic polynomials.

    Monic convention: ``p_{k+1} = (x - a_k) p_k - b_k p_{k-1}``.  ``b[0]`` holds
    the total mass of the weight (so that ``gamma_0 = b[0]**-0.5``); the
    recurrence proper uses ``b[1:]``.
    """

    weight_id: WeightId
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    n_max: int
    weight: Callable[[np.ndarray], np.ndarray] | None = None
    domain: tuple[float, float] = (-math.inf, math.inf)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("a", "b", "gamma"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.a.size < self.n_max + 1 or self.b.size < self.n_max + 1:
            raise ValueError("recurrence arrays shorter than n_max + 1")
        if np.any(self.b[: self.n_max + 1] <= 0):
            raise DiscretizationError("recurrence coefficient b_k must be positive")

    @property
    def compact(self) -> bool:
        return math.isfinite(self.domain[0]) and math.isfinite(self.domain[1])

    def _check_points(self, x) -> np.ndarray:
        arr = _as_finite_array(x)
        if self.compact and np.any((arr <= self.domain[0]) | (arr >= self.domain[1])):
            raise DomainError(f"points must lie inside the open interval {self.domain}")
        return arr

    def phi_batch(self, n: int, x) -> np.ndarray:
        """Rows phi_0(x), ..., phi_n(x) in one recurrence pass."""
        n = _check_degree(n, self.n_max)
        arr = self._check_points(x)
        if self.weight_id is WeightId.HERMITE_FIXED:
            return _hermite_rows(n, arr)
        return self._generic_rows(n, arr)

    def phi(self, k: int, x):
        k = _check_degree(k, self.n_max)
        if self.weight_id is WeightId.HERMITE_FIXED:
            return hermite_phi(k, x, n_max=self.n_max)
        val = self.phi_batch(k, x)[k]
        return float(val) if np.ndim(x) == 0 else val

    def _generic_rows(self, n: int, x: np.ndarray) -> np.ndarray:
        return self._poly_rows(n, x) * np.sqrt(self.weight(x))

    def _poly_rows(self, n: int, x: np.ndarray) -> np.ndarray:
        """Orthonormal polynomials (no weight factor)."""
        sb = np.sqrt(self.b)
        out = np.empty((n + 1,) + x.shape)
        p_prev = np.zeros_like(x)
        p = np.full_like(x, 1.0 / sb[0])
        out[0] = p
        for k in range(n):
            nxt = (x - self.a[k]) * p - (sb[k] * p_prev if k > 0 else 0.0)
            nxt /= sb[k + 1]
            p_prev, p = p, nxt
            out[k + 1] = p
        return out

    def quadrature(self, degree: int, order: int = 64) -> tuple[np.ndarray, np.ndarray]:
        """A rule integrating products phi_j phi_k (j, k <= degree) over the domain."""
        if self.weight_id is WeightId.HERMITE_FIXED:
            half = math.sqrt(2.0 * degree + 1.0) + 14.0
            n_panels = max(8, int(math.ceil(2 * half / 1.5)))
            return uniform_panels(-half, half, n_panels, order)
        # x = cos(theta) absorbs algebraic endpoint behaviour
        n_panels = max(4, int(math.ceil((degree + 2) / 8)))
        theta, wt = theta_rule(n_panels, order)
        return np.cos(theta), wt * np.sin(theta)

    def gram(self, degree: int) -> np.ndarray:
        x, w = self.quadrature(degree)
        wtheta = self.params.get("weight_theta")
        if wtheta is None or self.weight_id is WeightId.HERMITE_FIXED:
            rows = self.phi_batch(degree, x)
            return (rows * w) @ rows.T
        # evaluate the weight in theta so endpoint factors keep full relative accuracy
        # theta itself, not arccos(x), which loses accuracy near theta = pi
        degree = _check_degree(degree, self.n_max)
        theta, wt = theta_rule(max(4, int(math.ceil((degree + 2) / 8))), 64)
        rows = self._poly_rows(degree, np.cos(theta))
        return (rows * (wt * np.sin(theta) * wtheta(theta))) @ rows.T


def theta_rule(n_panels: int, order: int, depth: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on [0, pi]: uniform panels, the two end panels split geometrically.

    After x = cos(theta) a Jacobi factor (1-x)^g becomes theta^(2g) near 0; the
    geometric split keeps convergence exponential for non-integer 2g.
    """
    h = math.pi / n_panels
    inner = np.linspace(0.0, math.pi, n_panels + 1)
    grade = h * 0.5 ** np.arange(1, depth + 1)
    breaks = np.unique(np.concatenate([inner, grade, math.pi - grade]))
    return panel_rule(breaks, order)


def hermite_basis(n_max: int = HERMITE_N_MAX) -> OrthonormalBasis:
    k = np.arange(n_max + 2, dtype=float)
    b = k / 2.0
    b[0] = math.sqrt(math.pi)
    log_gamma = 0.5 * (k * _LN2 - 0.5 * math.log(math.pi) - np.array([math.lgamma(j + 1.0) for j in k]))
    return OrthonormalBasis(
        weight_id=WeightId.HERMITE_FIXED,
        a=np.zeros(n_max + 2),
        b=b,
        gamma=np.exp(log_gamma),
        n_max=n_max,
        weight=lambda x: np.exp(-np.asarray(x) ** 2),
        domain=(-math.inf, math.inf),
    )


def _omega0(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 - x * x) / math.pi


def chebyshev_basis(n_max: int = 4096) -> OrthonormalBasis:
    b = np.full(n_max + 2, 0.25)
    b[0] = 0.5
    k = np.arange(n_max + 2, dtype=float)
    with np.errstate(over="ignore"):
        gamma = np.exp(k * _LN2 + 0.5 * _LN2)
    return OrthonormalBasis(
        weight_id=WeightId.CHEBYSHEV_U,
        a=np.zeros(n_max + 2),
        b=b,
        gamma=gamma,
        n_max=n_max,
        weight=_omega0,
        domain=(-1.0, 1.0),
    )


def jacobi_modified_basis(
    gamma_plus: float,
    gamma_minus: float,
    h: Callable[[np.ndarray], np.ndarray] | tuple[np.ndarray, np.ndarray],
    n: int,
    nodes_per_degree: int = 20,
) -> OrthonormalBasis:
    """Basis for w(x) = h(x) (1-x)^gamma_minus (1+x)^gamma_plus on [-1, 1].

    ``h`` may be a callable or a tabulated pair ``(grid, values)``, the latter
    interpolated by a cubic spline.
    """
    if gamma_plus <= -1 or gamma_minus <= -1:
        raise DomainError("Jacobi exponents must exceed -1")
    if not callable(h):
        from scipy.interpolate import CubicSpline

        grid, values = (np.asarray(v, dtype=float) for v in h)
        h = CubicSpline(grid, values)

    def weight(x):
        x = np.asarray(x, dtype=float)
        return h(x) * (1.0 - x) ** gamma_minus * (1.0 + x) ** gamma_plus

    def weight_theta(theta):
        # 1 - cos t = 2 sin^2(t/2), 1 + cos t = 2 cos^2(t/2), exact near both ends
        theta = np.asarray(theta, dtype=float)
        return h(np.cos(theta)) * (2.0 * np.sin(0.5 * theta) ** 2) ** gamma_minus * (2.0 * np.cos(0.5 * theta) ** 2) ** gamma_plus

    a, b, gamma = stieltjes_recurrence(weight, n, nodes_per_degree=nodes_per_degree, weight_theta=weight_theta)
    return OrthonormalBasis(
        weight_id=WeightId.JACOBI_MODIFIED,
        a=a,
        b=b,
        gamma=gamma,
        n_max=n - 1,
        weight=weight,
        domain=(-1.0, 1.0),
        params={"gamma_plus": gamma_plus, "gamma_minus": gamma_minus, "weight_theta": weight_theta},
    )


def phi_batch(n_max: int, x, basis: OrthonormalBasis | None = None) -> np.ndarray:
    """phi_0(x), ..., phi_{n_max}(x); Hermite unless another basis is given."""
    if basis is None:
        k = _check_degree(n_max, HERMITE_N_MAX)
        return _hermite_rows(k, _as_finite_array(x))
    return basis.phi_batch(n_max, x)


def chebyshev_u(k: int, x, orthonormal: bool = False):
    """Monic Chebyshev polynomial of the second kind, or its wave function.

    ``u_k(x) = sin((k+1) arccos x) / (2^k sqrt(1-x^2))``; with
    ``orthonormal=True`` returns ``gamma_k u_k(x) sqrt(omega_0(x))`` where
    ``gamma_k = 2^k sqrt(2)`` and ``omega_0(x) = sqrt(1-x^2)/pi``.
    """
    k = _check_degree(k, 10**9)
    arr = _as_finite_array(x)
    if np.any(np.abs(arr) >= 1.0):
        raise DomainError("chebyshev_u requires |x| < 1")
    theta = np.arccos(arr)
    s = np.sin(theta)
    if orthonormal:
        val = math.sqrt(2.0 / math.pi) * np.sin((k + 1) * theta) / np.sqrt(s)
    else:
        val = np.ldexp(np.sin((k + 1) * theta) / s, -k)
    return float(val) if np.ndim(x) == 0 else val


# ---------------------------------------------------------------------------
# Stieltjes procedure


def stieltjes_recurrence(
    weight: Callable[[np.ndarray], np.ndarray],
    n: int,
    nodes_per_degree: int = 20,
    order: int = 20,
    weight_theta: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Recurrence coefficients (a_k, b_k, gamma_k), k < n, of a weight on [-1, 1].

    The weight is discretized by a composite Gauss-Legendre rule in theta with
    x = cos(theta), using at least ``nodes_per_degree * n`` nodes.  The
    discrete Stieltjes procedure then runs on normalized vectors.  ``b[0]`` is
    the total mass; ``gamma_k`` are the leading coefficients of the
    orthonormal polynomials.  ``weight_theta(t)``, if given, must equal
    ``weight(cos t)`` and is used instead, avoiding the cancellation in 1 -+ x
    near the endpoints.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if n > 200:
        raise DomainError("n is limited to 200")
    n_nodes = max(int(nodes_per_degree) * n, order)
    n_panels = max(1, -(-n_nodes // order))
    theta, wt = theta_rule(n_panels, order)
    x = np.cos(theta)
    wx = np.asarray(weight(x) if weight_theta is None else weight_theta(theta), dtype=float)
    if wx.shape != x.shape or not np.all(np.isfinite(wx)) or np.any(wx <= 0):
        raise DomainError("weight must be finite and strictly positive on (-1, 1)")
    w = wt * np.sin(theta) * wx

    a = np.empty(n)
    b = np.empty(n)
    mu0 = w.sum()
    b[0] = mu0
    p_prev = np.zeros_like(x)
    p = np.full_like(x, 1.0 / math.sqrt(mu0))
    for k in range(n):
        a[k] = np.dot(w, x * p * p)
        if k == n - 1:
            break
        q = (x - a[k]) * p
        if k > 0:
            q -= math.sqrt(b[k]) * p_prev
        bk1 = float(np.dot(w, q * q))
        if not bk1 > 1e-13 * max(1.0, float(b[1 : k + 1].max(initial=0.0))):
            raise DiscretizationError(f"discretization too coarse: b_{k + 1} = {bk1:.3e} lost positivity")
        b[k + 1] = bk1
        p_prev, p = p, q / math.sqrt(bk1)
    logs = -0.5 * np.cumsum(np.log(b))
    return a, b, np.exp(logs)


# ---------------------------------------------------------------------------
# Plancherel-Rotach asymptotics of phi_N(sqrt(2N) x)


def _check_open_interval(x) -> np.ndarray:
    arr = _as_finite_array(x)
    if np.any(np.abs(arr) >= 1.0):
        raise DomainError("requires |x| < 1")
    return arr


def _ret(val, x):
    return float(val) if np.ndim(x) == 0 else val


def pr_H(x):
    """H(x) = arccos x - x sqrt(1-x^2)."""
    arr = _check_open_interval(x)
    return _ret(np.arccos(arr) - arr * np.sqrt(1.0 - arr * arr), x)


def pr_varphi(x):
    """Phase offset arccos(x)/2 + pi/4."""
    arr = _check_open_interval(x)
    return _ret(0.5 * np.arccos(arr) + 0.25 * math.pi, x)


def pr_phase(N: int, x):
    """Psi_N(x) = N H(x) + arccos(x)/2 - pi/4."""
    arr = _check_open_interval(x)
    return _ret(N * pr_H(arr) + 0.5 * np.arccos(arr) - 0.25 * math.pi, x)


def pr_eta(N: int) -> float:
    """Amplitude constant eta_N = sqrt(e^N N! / (pi^{3/2} N^{N+1/2})).

    Evaluated through log-gamma; tends to 2^{1/4}/sqrt(pi) with O(1/N) error.
    """
    if N < 1:
        raise DomainError("eta_N requires N >= 1")
    return math.exp(0.5 * (N + math.lgamma(N + 1.0) - 1.5 * math.log(math.pi) - (N + 0.5) * math.log(N)))


def pr_lambda(N: int, x):
    """First-order correction Lambda_N(x) of the expansion of phi_{N-1}(sqrt(2N) x)."""
    arr = _check_open_interval(x)
    s = 1.0 - arr * arr
    nh = N * pr_H(arr)
    vp = pr_varphi(arr)
    val = ((3.0 / 16.0) * np.cos(nh + 3.0 * vp) / s + (5.0 / 48.0) * np.cos(nh + 5.0 * vp) / s**1.5) / N
    return _ret(val, x)


def pr_lambda_tilde(N: int, x):
    """Correction term for phi_N(sqrt(2N) x) relative to eta_{N+1}/(N(1-x^2))^{1/4}.

    Exact rewrite of the shifted expansion of phi_{(N+1)-1} at
    x_N = sqrt(N/(N+1)) x: with r = (N(1-x^2)/(N(1-x^2)+1))^{1/4},
    Lambda~_N = r Lambda_{N+1}(x_N) + (r - 1) cos Psi_N(x).
    """
    arr = _check_open_interval(x)
    s = 1.0 - arr * arr
    r = (N * s / (N * s + 1.0)) ** 0.25
    x_n = math.sqrt(N / (N + 1.0)) * arr
    val = r * pr_lambda(N + 1, x_n) + (r - 1.0) * np.cos(pr_phase(N, arr))
    return _ret(val, x)


@dataclass(frozen=True)
class PRApproximant:
    N: int
    x: float
    which: str
    order: int
    value: float
    correction_Lambda: float


_WHICH = {"phi_N": "phi_N", "N": "phi_N", "phi_N-1": "phi_N-1", "N-1": "phi_N-1"}


def pr_approximant(N: int, x: float, which: str = "phi_N", order: int = 1, eps: float = 0.15) -> PRApproximant:
    """Plancherel-Rotach approximant of phi_N(sqrt(2N) x) or phi_{N-1}(sqrt(2N) x)."""
    if which not in _WHICH:
        raise DomainError(f"which must be one of {sorted(set(_WHICH.values()))}")
    which = _WHICH[which]
    if order not in (0, 1):
        raise DomainError("order must be 0 or 1")
    if not 0.0 < eps < 1.0:
        raise DomainError("eps must lie in (0, 1)")
    if int(N) != N or N < 2:
        raise DomainError("N must be an integer >= 2")
    xv = float(x)
    if not math.isfinite(xv) or abs(xv) > 1.0 - eps:
        raise DomainError(f"|x| must not exceed 1 - eps = {1.0 - eps}")
    s = 1.0 - xv * xv
    psi = pr_phase(N, xv)
    if which == "phi_N":
        pref = pr_eta(N + 1) / (N * s) ** 0.25
        lead = math.cos(psi)
        corr = pr_lambda_tilde(N, xv) if order == 1 else 0.0
    else:
        pref = pr_eta(N) / (N * s) ** 0.25
        lead = math.cos(psi - math.acos(xv))
        corr = pr_lambda(N, xv) if order == 1 else 0.0
    return PRApproximant(N=int(N), x=xv, which=which, order=order, value=pref * (lead + corr), correction_Lambda=corr)


def pr_asymptotic(N: int, x, which: str = "phi_N", order: int = 1, eps: float = 0.15):
    """Value of :func:`pr_approximant`; vectorized over ``x``."""
    if np.ndim(x) == 0:
        return pr_approximant(N, x, which, order, eps).value
    arr = np.asarray(x, dtype=float)
    return np.array([pr_approximant(N, v, which, order, eps).value for v in arr.ravel()]).reshape(arr.shape)


@dataclass(frozen=True)
class PRScan:
    which: str
    order: int
    x_max: float
    N_list: tuple[int, ...]
    errors: tuple[float, ...]
    slope: float


def pr_error_scan(N_list, which: str = "phi_N", order: int = 1, x_max: float = 0.85, grid: int = 2001) -> PRScan:
    """Sup over |x| <= x_max of |phi(sqrt(2N) x) - approximant|, with the log-log slope in N."""
    N_list = tuple(int(n) for n in N_list)
    if len(N_list) < 2:
        raise DomainError("need at least two values of N")
    which = _WHICH.get(which, which)
    xs = np.linspace(-x_max, x_max, int(grid))
    errors = []
    for N in N_list:
        tail = hermite_tail(N, math.sqrt(2.0 * N) * xs)
        exact = tail[2] if which == "phi_N" else tail[1]
        approx = pr_asymptotic(N, xs, which, order, eps=1.0 - x_max)
        errors.append(float(np.max(np.abs(exact - approx))))
    slope = float(np.polyfit(np.log(N_list), np.log(errors), 1)[0])
    return PRScan(which, int(order), float(x_max), N_list, tuple(errors), slope)
