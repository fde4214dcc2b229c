import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from meso_dpp.errors import DomainError
from meso_dpp.kernels import arcsine, chebyshev, generic_cd, gue, semicircle
from meso_dpp.orthopoly import jacobi_modified_basis
from meso_dpp.sampling import (
    SeedStream,
    bisect_eigenvalue,
    dump_samples,
    load_samples,
    run_streams,
    sample_chebyshev,
    sample_cue,
    sample_gue,
    sample_projection_dpp,
    sturm_count,
    tridiag_eigenvalues,
)


@given(st.integers(1, 40), st.integers(0, 2**32))
@settings(max_examples=40, deadline=None)
def test_ql_matches_lapack(n, seed):
    rng = np.random.default_rng(seed)
    d, e = rng.normal(size=n), rng.normal(size=n - 1)
    ref = np.linalg.eigvalsh(np.diag(d) + np.diag(e, 1) + np.diag(e, -1))
    np.testing.assert_allclose(tridiag_eigenvalues(d, e), ref, atol=1e-12 * max(1, np.abs(ref).max()))


def test_sturm_and_bisection():
    rng = np.random.default_rng(3)
    d, e = rng.normal(size=25), rng.normal(size=24)
    ev = tridiag_eigenvalues(d, e)
    for k in (0, 7, 24):
        assert bisect_eigenvalue(d, e, k) == pytest.approx(ev[k], abs=1e-12)
    assert sturm_count(d, e, 0.5 * (ev[10] + ev[11])) == 11


def test_tridiag_validation():
    with pytest.raises(DomainError):
        tridiag_eigenvalues([], [])
    with pytest.raises(DomainError):
        tridiag_eigenvalues([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(DomainError):
        tridiag_eigenvalues([1.0, np.nan], [1.0])


def test_seed_stream_determinism():
    a = sample_gue(50, SeedStream(7, 3)).points
    b = sample_gue(50, SeedStream(7, 3)).points
    c = sample_gue(50, SeedStream(7, 4)).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    with pytest.raises(DomainError):
        SeedStream(-1)
    with pytest.raises(DomainError):
        SeedStream(1, -2)


def test_run_streams_thread_independent():
    f = lambda s: sample_cue(12, s).points
    one = run_streams(f, 11, 10, threads=1)
    many = run_streams(f, 11, 10, threads=4)
    assert all(np.array_equal(a, b) for a, b in zip(one, many))


def test_gue_trace_moments():
    # Tr H ~ N(0, 1/2) and E Tr H^2 = N/2 for the exp(-N tr H^2) ensemble
    cfgs = run_streams(lambda s: sample_gue(20, s).points, 1, 3000)
    t1 = np.array([c.sum() for c in cfgs])
    t2 = np.array([(c * c).sum() for c in cfgs])
    assert abs(t1.mean()) < 4 * math.sqrt(0.5 / 3000)
    assert abs(t1.var() - 0.5) < 4 * 0.5 * math.sqrt(2 / 3000)
    assert abs(t2.mean() - 10.0) < 4 * t2.std() / math.sqrt(3000)


def test_gue_semicircle_ks():
    pts = sample_gue(2000, SeedStream(5)).points
    d = stats.kstest(pts, lambda x: semicircle().cdf(x) + 0.5).statistic
    assert d < 0.05


def test_chebyshev_arcsine_ks():
    pts = sample_chebyshev(500, SeedStream(5)).points
    assert np.all(np.abs(pts) < 1)
    d = stats.kstest(pts, lambda x: arcsine().cdf(x) + 0.5).statistic
    assert d < 0.05


def test_cue_angles_and_rigidity():
    cfg = sample_cue(40, SeedStream(2))
    assert len(cfg) == 40
    assert np.all((cfg.points >= 0) & (cfg.points < 2 * math.pi))
    # repulsion: the smallest gap is far larger than for 40 independent uniforms would typically allow
    gaps = np.diff(np.concatenate([cfg.points, [cfg.points[0] + 2 * math.pi]]))
    assert gaps.min() > 1e-3


def test_cue_one_point_density():
    # counts in a fixed arc have mean N*arc/(2pi) and variance O(log N)
    arc = (0.0, 1.0)
    counts = [np.sum((c >= arc[0]) & (c < arc[1])) for c in run_streams(lambda s: sample_cue(30, s).points, 9, 400)]
    counts = np.array(counts)
    assert abs(counts.mean() - 30 / (2 * math.pi)) < 4 * counts.std() / 20
    assert counts.var() < 2.0  # Poisson would be ~4.8


def test_hkpv_generic_cd_and_gue_kernel():
    B = jacobi_modified_basis(0.5, 0.5, lambda x: np.ones_like(x), 40)
    cfg = sample_projection_dpp(generic_cd(B, 8), SeedStream(1))
    assert len(cfg) == 8 and np.all(np.abs(cfg.points) < 1)
    cfg = sample_projection_dpp(gue(6), SeedStream(1))
    assert len(cfg) == 6


def test_hkpv_count_statistics_match_kernel():
    # E #points in A = int_A K(x,x) dx for the Chebyshev ensemble
    N, M = 10, 600
    K = chebyshev(N)
    z, w = K.rule(-1.0, 0.3)
    expected = float(np.dot(w, K.diag(z)))
    counts = np.array([np.sum(c < 0.3) for c in run_streams(lambda s: sample_chebyshev(N, s).points, 4, M)])
    assert abs(counts.mean() - expected) < 4 * counts.std() / math.sqrt(M)


def test_dump_roundtrip():
    cfgs = [sample_gue(5, SeedStream(3, i)) for i in range(3)]
    buf = io.StringIO()
    dump_samples(cfgs, buf)
    meta, rows = load_samples(buf.getvalue().splitlines())
    assert meta["ensemble"] == "gue" and meta["N"] == "5"
    assert all(np.array_equal(r, c.points) for r, c in zip(rows, cfgs))
    with pytest.raises(DomainError):
        dump_samples([], buf)
