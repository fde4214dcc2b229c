import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from meso_dpp.errors import BulkExitError, ConvergenceError, DomainError
from meso_dpp.kernels import chebyshev, cue, gue, semicircle
from meso_dpp.sampling import PointConfiguration, SeedStream, run_streams, sample_gue
from meso_dpp.statistics import (
    CumulantReport,
    TestFunction,
    builtin_test_function,
    bump,
    clt_experiment,
    cumulant_trace,
    empirical_cumulants,
    g_t_function,
    gaussian,
    h_half_norm,
    h_one_norm,
    linear_statistic,
    mcl_permutation_sum,
    mollified_sine,
    mollified_step,
    monomial,
    sigma_macro,
    sigma_tilde,
    unfold_map,
    upsilon,
    variance_exact,
)

# independent scipy dblquad oracle for the bump
BUMP_H_HALF = 0.2108674957866511


# ----- H^1/2 norms -----------------------------------------------------------


def test_bump_h_half_oracle_both_routes():
    assert h_half_norm(bump()) == pytest.approx(BUMP_H_HALF, rel=1e-11)
    assert h_half_norm(bump(), "fourier") == pytest.approx(BUMP_H_HALF, rel=1e-10)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_gaussian_h_half_closed_form(sigma):
    # int |f^(u)|^2 |u| du = 1/(2 pi) for every width
    assert h_half_norm(gaussian(sigma)) == pytest.approx(1 / (2 * math.pi), rel=1e-9)
    assert h_half_norm(gaussian(sigma), "fourier") == pytest.approx(1 / (2 * math.pi), rel=1e-10)


def test_double_integral_matches_fourier_grid():
    f = mollified_step()
    assert h_half_norm(f) == pytest.approx(h_half_norm(f, "fourier"), rel=1e-7)


def test_mollified_sine_stable_in_eps():
    a, b = h_half_norm(mollified_sine(1e-3)), h_half_norm(mollified_sine(1e-4))
    assert abs(a - b) < 1e-3 * b


@pytest.mark.parametrize("eta", [0.5, 2.0, 10.0])
def test_h_half_scale_invariance(eta):
    assert h_half_norm(bump().scaled(eta)) == pytest.approx(BUMP_H_HALF, rel=1e-9)


def test_h_one_scales_linearly():
    base = h_one_norm(bump())
    assert h_one_norm(bump().scaled(3.0)) == pytest.approx(3.0 * base, rel=1e-8)


def test_non_h_half_function_is_rejected():
    ind = TestFunction("indicator", lambda x: np.ones_like(x), (-1.0, 1.0), "H1/2-only")
    with pytest.raises(ConvergenceError, match="not in the required space"):
        h_half_norm(ind)
    with pytest.raises(DomainError):
        h_one_norm(ind)
    with pytest.raises(DomainError):
        h_half_norm(bump(), "spectral")


def test_g_t_double_integral_route():
    f = g_t_function(1.0, 1.0)
    closed = 0.5 * math.log1p(1.0 / 4.0)
    assert h_half_norm(f) == pytest.approx(closed, rel=1e-7)
    assert h_half_norm(f, "fourier") == pytest.approx(closed, rel=1e-10)


# ----- global functionals ----------------------------------------------------


def test_sigma_polynomials():
    # Chebyshev expansion: Sigma^2 = 1/4 sum k a_k^2
    assert sigma_macro(monomial(1)) == pytest.approx(0.25, rel=1e-12)
    assert sigma_macro(monomial(2)) == pytest.approx(0.125, rel=1e-12)
    assert sigma_tilde(monomial(1)) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(0.05, 0.9), st.floats(-0.8, 0.8))
@settings(max_examples=15, deadline=None)
def test_sigma_macro_below_sigma_tilde(width, center):
    f = bump()
    g = TestFunction("b", lambda x: f.evaluator((np.asarray(x) - center) / width), (center - width, center + width))
    assert sigma_macro(g) <= sigma_tilde(g)


def test_sigma_macro_increases_to_h_half():
    vals = [sigma_macro(bump().scaled(e)) for e in (2, 4, 8, 16)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert all(v < BUMP_H_HALF for v in vals)
    assert vals[-1] == pytest.approx(BUMP_H_HALF, rel=0.05)


# ----- exact cumulants ---------------------------------------------------------


@pytest.mark.parametrize(
    "kernel,x0",
    [(gue(60), 0.1), (chebyshev(40), 0.2), (cue(41), 1.0)],
)
def test_second_cumulant_equals_variance(kernel, x0):
    f = bump()
    v = variance_exact(kernel, f, x0, 0.5)
    assert cumulant_trace(kernel, f, x0, 0.5, n=2) == pytest.approx(v, rel=1e-8)
    assert 0 < v < 32 * BUMP_H_HALF


def test_first_cumulant_cue_exact():
    # the CUE density is N/(2 pi): C1 = N/(2 pi) * N^-alpha * int f
    N, alpha = 41, 0.5
    x, w = np.polynomial.legendre.leggauss(400)
    mass = float(np.dot(w, bump()(x)))
    expected = N / (2 * math.pi) * N**-alpha * mass
    assert cumulant_trace(cue(N), bump(), 1.0, alpha, n=1) == pytest.approx(expected, rel=1e-8)


def test_trace_of_kernel_is_N():
    one = TestFunction("one", lambda x: np.ones_like(np.asarray(x, dtype=float)), (-2.0, 2.0))
    assert cumulant_trace(gue(20), one, 0.0, 0.0, n=1) == pytest.approx(20.0, abs=1e-8)


def test_third_cumulant_decreases():
    c3 = [abs(cumulant_trace(gue(N), bump(), 0.1, 0.5, n=3)) for N in (100, 200, 400)]
    assert c3[0] > c3[1] > c3[2]


def test_cumulant_order_validation():
    with pytest.raises(DomainError):
        cumulant_trace(gue(10), bump(), 0.0, 0.5, n=4)


# ----- combinatorial identity----------------------------------------------------


def _zero_sum(draw_vals):
    u = np.array(draw_vals, dtype=float)
    return np.append(u, -math.fsum(u))


@given(st.integers(2, 5).flatmap(lambda n: st.lists(st.floats(-10, 10), min_size=n - 1, max_size=n - 1)))
@settings(max_examples=60, deadline=None)
def test_permutation_sums(vals):
    u = _zero_sum(vals)
    s = mcl_permutation_sum(u)
    expected = abs(u[0]) if u.size == 2 else 0.0
    assert s == pytest.approx(expected, abs=1e-12 * max(1.0, np.abs(u).sum()) * math.factorial(u.size))


@given(st.floats(-100, 100))
def test_upsilon_two_points(u):
    assert upsilon([u, -u]) == max(u, 0.0)
    assert 0.5 * (upsilon([u, -u]) + upsilon([-u, u])) == abs(u) / 2


def test_upsilon_validation():
    with pytest.raises(DomainError):
        upsilon([1.0])
    with pytest.raises(DomainError):
        mcl_permutation_sum([1.0, 2.0])


# ----- unfolding -------------------------------------------------------------------


def test_unfold_roundtrip_and_derivative():
    U = unfold_map(semicircle(), 0.1, 0.5, 256)
    y = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(U.forward(U.inverse(y)), y, atol=1e-12)
    h = 1e-6
    fd = (U.forward(y + h) - U.forward(y - h)) / (2 * h)
    rho = semicircle().density(0.1 + y / 16)
    np.testing.assert_allclose(fd, rho / U.rho0, rtol=1e-7)


def test_unfolding_error_decreases():
    errs = []
    for N in (64, 256, 1024):
        fN = unfold_map(semicircle(), 0.1, 0.5, N).transform(bump())
        errs.append(math.sqrt(h_one_norm(fN - bump())))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2
    # Taylor remainder: the error is O(N^-alpha)
    assert errs[0] / errs[2] == pytest.approx(4.0, rel=0.15)


def test_unfolding_bulk_checks():
    with pytest.raises(BulkExitError):
        unfold_map(semicircle(), 1.5, 0.5, 100)
    with pytest.raises(BulkExitError):
        unfold_map(semicircle(), 1.35, 0.2, 4).forward(np.array([1.0]))


# ----- k-statistics --------------------------------------------------------------------


def test_kstatistics_match_scipy():
    x = np.random.default_rng(0).gamma(2.0, size=500)
    ks = empirical_cumulants(x)
    for n in range(1, 5):
        assert ks.k[n - 1] == pytest.approx(stats.kstat(x, n), rel=1e-10)


def test_kstat_se_scaling():
    rng = np.random.default_rng(1)
    a = empirical_cumulants(rng.normal(size=20000)).se
    b = empirical_cumulants(rng.normal(size=40000)).se
    # SE estimates of higher k-statistics are themselves noisier
    for sa, sb, r in zip(a, b, (0.05, 0.1, 0.25, 0.25)):
        assert sb / sa == pytest.approx(1 / math.sqrt(2), rel=r)
    # normal: SE(k2) = sqrt(2/(n-1)) sigma^2
    assert b[1] == pytest.approx(math.sqrt(2 / 40000), rel=0.05)


def test_kstat_validation():
    with pytest.raises(DomainError):
        empirical_cumulants(np.zeros(50))
    with pytest.raises(DomainError):
        empirical_cumulants(np.append(np.zeros(200), np.nan))


# ----- statistics of samples -------------------------------------------------------


def test_linear_statistic_wraps_cue_angles():
    cfg = PointConfiguration(np.array([0.05, 2 * math.pi - 0.05]), "cue", 2, 0, 0)
    f = gaussian(1.0)
    assert linear_statistic(cfg, f, 0.0, 1.0) == pytest.approx(2 * math.exp(-0.5 * 0.1**2), rel=1e-14)


def test_gue_mc_variance_matches_exact():
    N, M = 30, 20000
    f = bump()
    vals = run_streams(lambda s: linear_statistic(sample_gue(N, s), f, 0.1, 0.5), 2024, M)
    ks = empirical_cumulants(vals)
    exact_var = variance_exact(gue(N), f, 0.1, 0.5)
    exact_mean = cumulant_trace(gue(N), f, 0.1, 0.5, n=1)
    assert abs(ks.k[1] - exact_var) < 5 * ks.se[1]
    assert abs(ks.k[0] - exact_mean) < 5 * ks.se[0]


def test_clt_experiment_report_roundtrip():
    rep = clt_experiment("gue", bump(), 0.1, 0.5, 40, 200, seed=3)
    assert isinstance(rep, CumulantReport)
    assert rep.exact_C2 == pytest.approx(variance_exact(gue(40), bump(), 0.1, 0.5), rel=1e-8)
    assert rep.target_variance == pytest.approx(BUMP_H_HALF, rel=1e-9)
    assert CumulantReport.from_dict(rep.to_dict()) == rep
    assert len(rep.row()) == len(CumulantReport.COLUMNS)
    same = clt_experiment("gue", bump(), 0.1, 0.5, 40, 200, seed=3, threads=3)
    assert same.k2 == rep.k2


def test_clt_global_mode():
    rep = clt_experiment("gue", monomial(1), 0.0, 0.0, 50, 300, seed=1)
    assert rep.mode == "global"
    assert rep.target_variance == pytest.approx(0.25)
    assert rep.exact_C2 == pytest.approx(0.25, rel=1e-8)
    with pytest.raises(DomainError):
        clt_experiment("cue", bump(), 0.0, 0.0, 10, 100, seed=1)


def test_builtin_lookup():
    assert builtin_test_function("bump").name == "bump"
    assert builtin_test_function("bump", scale=2.0).support == (-0.5, 0.5)
    with pytest.raises(DomainError):
        builtin_test_function("nope")
