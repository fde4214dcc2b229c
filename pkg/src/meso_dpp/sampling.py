"""Exact samplers for the eigenvalue point processes.

* GUE: Dumitriu-Edelman tridiagonal model (beta = 2) diagonalized by an
  implicit QL iteration with Wilkinson shifts.
* Projection DPPs (CUE, Chebyshev, any Christoffel-Darboux kernel): the
  sequential HKPV algorithm.  Each point is drawn from the conditional density
  ||V^T Phi(x)||^2 / r, where Phi is the feature map of the kernel and the
  columns of V span the part of feature space not yet used; after each draw
  the drawn direction is removed from V by a Householder reflection.

Randomness comes from :class:`SeedStream`, a (root seed, stream index) pair
mapped to an independent PCG64 generator, so any configuration can be
regenerated bit-for-bit on its own.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence, TextIO

import numba
import numpy as np

from .errors import ConvergenceError, DomainError, EnvelopeError, NumericalError
from .kernels import ProjectionKernel, chebyshev, cue

__all__ = [
    "SeedStream",
    "PointConfiguration",
    "tridiag_eigenvalues",
    "sturm_count",
    "bisect_eigenvalue",
    "sample_gue",
    "sample_projection_dpp",
    "sample_cue",
    "sample_chebyshev",
    "run_streams",
    "default_threads",
    "dump_samples",
    "load_samples",
]

THREADS_ENV = "MESO_DPP_THREADS"


# ---------------------------------------------------------------------------
# Seeds and configurations


@dataclass(frozen=True)
class SeedStream:
    """Counter-based substream (root seed, stream index) -> independent generator."""

    root: int
    index: int = 0

    def __post_init__(self):
        if not (0 <= int(self.root) < 2**64) or int(self.root) != self.root:
            raise DomainError("root seed must be a 64-bit unsigned integer")
        if int(self.index) != self.index or self.index < 0:
            raise DomainError("stream index must be a non-negative integer")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=int(self.root), spawn_key=(int(self.index),))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "SeedStream":
        return SeedStream(self.root, index)


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    """One sampled configuration: sorted points (angles in [0, 2 pi) for CUE)."""

    points: np.ndarray
    ensemble: str
    N: int
    seed: int
    stream_index: int
    scale: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def flagged_tail(self) -> bool:
        """True when a GUE point lies beyond |x| > 3 (astronomically rare)."""
        return self.ensemble == "gue" and bool(np.any(np.abs(self.points) > 3.0))

    def __len__(self):
        return self.points.size


# ---------------------------------------------------------------------------
# Symmetric tridiagonal eigenvalues


@numba.njit(cache=True, nogil=True)
def _ql_implicit(d, e, max_iter):
    # d: diagonal (overwritten by eigenvalues), e: off-diagonal padded to len(d)
    # with e[i] coupling rows i and i+1.  Returns the iteration count, or -1.
    n = d.shape[0]
    eps = 2.220446049250313e-16
    total = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            total += 1
            if total > max_iter:
                return -1
            # Wilkinson shift from the leading 2x2 block
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            deflated = False
            i = m - 1
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return total


def tridiag_eigenvalues(diag, offdiag) -> np.ndarray:
    """All eigenvalues (ascending) of a real symmetric tridiagonal matrix."""
    d = np.array(diag, dtype=float).ravel()
    off = np.asarray(offdiag, dtype=float).ravel()
    n = d.size
    if n == 0:
        raise DomainError("empty matrix")
    if off.size != n - 1:
        raise DomainError("offdiag must have length len(diag) - 1")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(off))):
        raise DomainError("non-finite matrix entry")
    e = np.zeros(n)
    e[: n - 1] = off
    if _ql_implicit(d, e, 30 * n) < 0:
        raise ConvergenceError(f"QL iteration did not converge within {30 * n} sweeps")
    d.sort()
    return d


def sturm_count(diag, offdiag, x: float) -> int:
    """Number of eigenvalues strictly below ``x`` (Sturm sequence / LDL^T signs)."""
    d = np.asarray(diag, dtype=float)
    e2 = np.asarray(offdiag, dtype=float) ** 2
    tiny = np.finfo(float).tiny ** 0.5
    count = 0
    q = d[0] - x
    for i in range(d.size):
        if i > 0:
            q = d[i] - x - e2[i - 1] / q
        if q == 0.0:
            q = -tiny
        if q < 0:
            count += 1
    return count


def bisect_eigenvalue(diag, offdiag, k: int, tol: float = 1e-14) -> float:
    """The k-th smallest eigenvalue (0-based) by Sturm bisection."""
    d = np.asarray(diag, dtype=float)
    off = np.abs(np.asarray(offdiag, dtype=float))
    rad = np.zeros_like(d)
    rad[:-1] += off
    rad[1:] += off
    lo, hi = float(np.min(d - rad)), float(np.max(d + rad))
    while hi - lo > tol * max(1.0, abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if sturm_count(d, off, mid) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# GUE


def sample_gue(N: int, stream: SeedStream) -> PointConfiguration:
    """Eigenvalues of the exp(-N tr H^2) GUE via the beta = 2 tridiagonal model."""
    if int(N) != N or N < 1:
        raise DomainError("N must be a positive integer")
    rng = stream.generator()
    diag = rng.standard_normal(N)
    # chi_{2(N-k)} / sqrt(2), k = 1..N-1, as square roots of Gamma(N-k, scale 2)
    shape = np.arange(N - 1, 0, -1, dtype=float)
    off = np.sqrt(rng.gamma(shape, 2.0)) / math.sqrt(2.0)
    scale = math.sqrt(2.0 * N)
    ev = tridiag_eigenvalues(diag / scale, off / scale)
    return PointConfiguration(ev, "gue", int(N), stream.root, stream.index, {"support": [-math.sqrt(2), math.sqrt(2)]})


# ---------------------------------------------------------------------------
# HKPV


class _Proposal:
    """Proposal density q with an envelope E(x) >= ||Phi(x)||^2 (in the same coordinate)."""

    N: int

    def draw(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Return (points, envelope values)."""
        raise NotImplementedError

    def features(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _CueProposal(_Proposal):
    def __init__(self, kernel: ProjectionKernel):
        self.kernel = kernel
        self.N = kernel.N
        self.env = kernel.N / (2.0 * math.pi)

    def draw(self, rng, size):
        x = 2.0 * math.pi * rng.random(size)
        return x, np.full(size, self.env)

    def features(self, x):
        return self.kernel.features(x)


class _ChebyshevProposal(_Proposal):
    # theta density (2/(pi N)) sum_{k=1}^N sin^2(k theta) sampled exactly as a
    # mixture; the induced x-density is K(x,x)/N, so the envelope is exact
    def __init__(self, kernel: ProjectionKernel):
        self.kernel = kernel
        self.N = kernel.N

    def draw(self, rng, size):
        out = np.empty(size)
        filled = 0
        while filled < size:
            need = size - filled
            m = 2 * need + 8
            k = rng.integers(1, self.N + 1, size=m)
            theta = math.pi * rng.random(m)
            ok = rng.random(m) < np.sin(k * theta) ** 2
            got = theta[ok][:need]
            out[filled : filled + got.size] = got
            filled += got.size
        x = np.cos(out)
        # guard against cos(theta) rounding onto the closed endpoints
        x = np.clip(x, -np.nextafter(1.0, 0.0), np.nextafter(1.0, 0.0))
        f = self.kernel.features(x)
        return x, np.sum(f * f, axis=0), f

    def features(self, x):
        return self.kernel.features(x)


class _GridProposal(_Proposal):
    """Piecewise-constant majorant of ||Phi||^2 built once on a fine grid."""

    def __init__(self, kernel: ProjectionKernel, cells: int | None = None, sub: int = 8, safety: float = 1.25):
        self.kernel = kernel
        self.N = kernel.N
        self.theta_coord = math.isfinite(kernel.domain[0])
        if self.theta_coord:
            lo, hi = 0.0, math.pi
        else:
            lo, hi = kernel.essential_support()
        cells = cells or (16 * self.N + 64)
        edges = np.linspace(lo, hi, cells + 1)
        fine = np.linspace(lo, hi, cells * sub + 1)
        dens = self._density(fine)
        seg = np.maximum(dens[:-1], dens[1:]).reshape(cells, sub).max(axis=1)
        self.edges = edges
        self.height = safety * seg + 1e-300
        mass = self.height * np.diff(edges)
        self.cdf = np.cumsum(mass) / mass.sum()

    def _density(self, u):
        if self.theta_coord:
            interior = (u > 0) & (u < math.pi)
            out = np.zeros_like(u)
            f = self.kernel.features(np.cos(u[interior]))
            out[interior] = np.sum(f * f, axis=0) * np.sin(u[interior])
            return out
        f = self.kernel.features(u)
        return np.sum(f * f, axis=0)

    def draw(self, rng, size):
        cell = np.searchsorted(self.cdf, rng.random(size), side="right")
        cell = np.minimum(cell, self.cdf.size - 1)
        u = self.edges[cell] + (self.edges[cell + 1] - self.edges[cell]) * rng.random(size)
        env = self.height[cell]
        if self.theta_coord:
            u = np.clip(u, 1e-300, math.pi * (1 - 1e-16))
            x = np.cos(u)
            x = np.clip(x, -np.nextafter(1.0, 0.0), np.nextafter(1.0, 0.0))
            # densities are compared in theta: ||Phi(x)||^2 sin(theta) <= env
            return x, env / np.sin(u)
        return u, env

    def features(self, x):
        return self.kernel.features(x)


def _proposal_for(kernel: ProjectionKernel) -> _Proposal:
    if kernel.family == "cue":
        return _CueProposal(kernel)
    if kernel.family == "chebyshev":
        return _ChebyshevProposal(kernel)
    if kernel.family in ("generic_cd", "gue"):
        return _GridProposal(kernel)
    raise DomainError(f"no finite-rank basis available for family {kernel.family!r}")


def sample_projection_dpp(
    kernel: ProjectionKernel,
    stream: SeedStream,
    min_acceptance: float = 1e-4,
    ensemble: str | None = None,
) -> PointConfiguration:
    """Exact HKPV sample of the projection DPP with the given finite-rank kernel."""
    if not kernel.finite_rank:
        raise DomainError("HKPV needs a finite-rank kernel")
    N = kernel.N
    rng = stream.generator()
    prop = _proposal_for(kernel)
    V = np.eye(N)
    points = np.empty(N)
    proposals = 0
    for step in range(N):
        r = N - step
        batch = min(4096, int(math.ceil(1.5 * N / r)) + 4)
        while True:
            drawn = prop.draw(rng, batch)
            if len(drawn) == 3:
                x, env, feats = drawn
            else:
                x, env = drawn
                feats = prop.features(x)
            W = V.T @ feats
            num = np.einsum("ij,ij->j", W, W)
            if np.any(num > env * (1.0 + 1e-9)):
                raise EnvelopeError("rejection envelope violated: conditional density exceeds the majorant")
            u = rng.random(batch)
            hit = np.flatnonzero(u * env < num)
            if hit.size:
                j = hit[0]
                proposals += j + 1
                break
            proposals += batch
            if proposals > 1e5 and (step + 1) / proposals < min_acceptance:
                raise EnvelopeError(
                    f"acceptance rate {(step + 1) / proposals:.2e} below {min_acceptance:.0e} after {proposals} proposals"
                )
        points[step] = x[j]
        w = W[:, j]
        nw = math.sqrt(num[j])
        if not nw > 1e-7 * math.sqrt(max(np.dot(feats[:, j], feats[:, j]), 1e-300)):
            raise NumericalError("basis degeneracy: drawn point is (numerically) in the span of previous points")
        if r == 1:
            break
        # Householder H with H (w/|w|) = -sign e_1; V H has the drawn direction first
        v = w / nw
        h = v.copy()
        h[0] += 1.0 if v[0] >= 0 else -1.0
        h /= math.sqrt(np.dot(h, h))
        V = (V - 2.0 * np.outer(V @ h, h))[:, 1:]
    name = ensemble or kernel.family
    return PointConfiguration(points, name, N, stream.root, stream.index, {"proposals": int(proposals)})


def sample_cue(N: int, stream: SeedStream) -> PointConfiguration:
    """CUE eigenangles in [0, 2 pi) by HKPV on the Fourier basis."""
    return sample_projection_dpp(cue(N), stream, ensemble="cue")


def sample_chebyshev(N: int, stream: SeedStream) -> PointConfiguration:
    return sample_projection_dpp(chebyshev(N), stream, ensemble="chebyshev")


# ---------------------------------------------------------------------------
# Monte Carlo fan-out


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise DomainError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def run_streams(
    func: Callable[[SeedStream], object],
    root: int,
    count: int,
    threads: int | None = None,
    start: int = 0,
) -> list:
    """``[func(SeedStream(root, i)) for i in range(start, start + count)]``.

    Work is spread over ``threads`` workers, but results are always returned in
    stream-index order, so downstream reductions do not depend on scheduling.
    """
    threads = threads or default_threads()
    streams = [SeedStream(root, i) for i in range(start, start + count)]
    if threads == 1:
        return [func(s) for s in streams]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, streams))


# ---------------------------------------------------------------------------
# Raw sample dumps


def dump_samples(configs: Sequence[PointConfiguration], fh: TextIO) -> None:
    """Header line, then one comma-separated sorted configuration per line."""
    if not configs:
        raise DomainError("nothing to dump")
    c0 = configs[0]
    fh.write(f"# ensemble={c0.ensemble} N={c0.N} seed={c0.seed} streams={c0.stream_index}..{configs[-1].stream_index}\n")
    for c in configs:
        fh.write(",".join(format(v, ".17g") for v in c.points))
        fh.write("\n")


def load_samples(lines: Iterable[str]) -> tuple[dict, list[np.ndarray]]:
    it = iter(lines)
    header = next(it).strip()
    if not header.startswith("#"):
        raise DomainError("missing sample-dump header")
    meta = dict(tok.split("=", 1) for tok in header[1:].split())
    rows = [np.array([float(v) for v in line.split(",")]) for line in it if line.strip()]
    return meta, rows
