"""Acceptance suite: the ten end-to-end criteria at their required tolerances.

Each test prints one ``criterion k: PASS|FAIL ...`` line (visible even under
output capture) and then asserts.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from meso_dpp.charpoly import FbmParams, fbm_covariance, fbm_covariance_fourier, fbm_experiment
from meso_dpp.kernels import arcsine, chebyshev, gue, kernel_error_scan, semicircle
from meso_dpp.orthopoly import chebyshev_basis, hermite_basis, pr_error_scan
from meso_dpp.sampling import SeedStream, sample_chebyshev, sample_gue
from meso_dpp.statistics import (
    bump,
    clt_experiment,
    cumulant_trace,
    g_t_function,
    gaussian,
    h_half_norm,
    h_one_norm,
    mcl_permutation_sum,
    mollified_step,
    monomial,
    sigma_tilde,
    unfold_map,
    upsilon,
    variance_exact,
)

SEED = 2024


def _report(capsys, k, ok, detail, t0):
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - t0:.1f} s) {detail}")


def test_criterion_01_orthonormality_and_projection(capsys):
    t0 = time.perf_counter()
    gram_err = max(np.max(np.abs(B.gram(50) - np.eye(51))) for B in (hermite_basis(), chebyshev_basis(64)))
    rep_err, tr_err = 0.0, 0.0
    for make in (gue, chebyshev):
        for N in (1, 5, 10, 20):
            K = make(N)
            z, w = K.rule(*K.essential_support())
            tr_err = max(tr_err, abs(float(np.dot(w, K.diag(z))) - N))
            pts = np.linspace(-0.8, 0.8, 7)
            F = K.matrix(pts, z)
            rep_err = max(rep_err, float(np.max(np.abs((F * w) @ F.T - K(pts[:, None], pts[None, :])))))
    ok = gram_err < 1e-10 and rep_err < 1e-7 and tr_err < 1e-8 and time.perf_counter() - t0 < 30
    _report(capsys, 1, ok, f"gram {gram_err:.2e}, reproducing {rep_err:.2e}, trace {tr_err:.2e}", t0)
    assert ok


def test_criterion_02_plancherel_rotach_rate(capsys):
    t0 = time.perf_counter()
    scans = [pr_error_scan([50, 100, 200, 400], w, order=1, x_max=0.85) for w in ("phi_N", "phi_N-1")]
    ok = all(abs(s.slope + 2.0) <= 0.3 for s in scans) and time.perf_counter() - t0 < 60
    _report(capsys, 2, ok, "slopes " + ", ".join(f"{s.which} {s.slope:.3f}" for s in scans), t0)
    assert ok


def test_criterion_03_sine_kernel_rate(capsys):
    t0 = time.perf_counter()
    cases = [("gue", a, x0) for a in (0.3, 0.5, 0.8) for x0 in (0.0, 0.5)]
    cases += [("chebyshev", a, x0) for a in (0.5, 0.8) for x0 in (0.0, 0.5)]
    out = []
    for fam, a, x0 in cases:
        s = kernel_error_scan(fam, a, x0, 1.0, [64, 128, 256, 512])
        out.append((fam, a, x0, s.slope))
    worst = max(abs(sl + a) for _, a, _, sl in out)
    ok = worst <= 0.2 and time.perf_counter() - t0 < 300
    _report(capsys, 3, ok, f"max |slope + alpha| = {worst:.3f} over {len(out)} scans", t0)
    assert ok


def test_criterion_04_exact_cumulants(capsys):
    t0 = time.perf_counter()
    f = bump()
    c2v, c1d, c3 = 0.0, 0.0, []
    for N in (100, 200, 400):
        K = gue(N)
        var = variance_exact(K, f, 0.1, 0.5)
        c2 = cumulant_trace(K, f, 0.1, 0.5, n=2)
        c2v = max(c2v, abs(c2 - var))
        # C1 against an independent direct integral of f(N^a(x - x0)) K(x, x)
        s = N**-0.5
        x, w = np.polynomial.legendre.leggauss(400)
        xs = 0.1 + s * x
        direct = float(np.dot(w * f(x), K.diag(xs))) * s
        c1d = max(c1d, abs(cumulant_trace(K, f, 0.1, 0.5, n=1) - direct))
        c3.append(abs(cumulant_trace(K, f, 0.1, 0.5, n=3)))
        last_c2 = c2
    dec = c3[0] > c3[1] > c3[2]
    small = c3[2] < 0.05 * last_c2**1.5
    ok = c2v < 1e-8 and c1d < 1e-8 and dec and small and time.perf_counter() - t0 < 300
    _report(capsys, 4, ok, f"|C2-Var| {c2v:.1e}, |C1-direct| {c1d:.1e}, |C3| {[f'{v:.2e}' for v in c3]}", t0)
    assert ok


def test_criterion_05_combinatorial_identity(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 3, 4, 5):
        rng = SeedStream(SEED, n).generator()
        for _ in range(50):
            u = rng.standard_normal(n)
            u[-1] = -math.fsum(u[:-1])
            want = abs(u[0]) if n == 2 else 0.0
            worst = max(worst, abs(mcl_permutation_sum(u) - want))
    us = SeedStream(SEED, 99).generator().normal(scale=5.0, size=50)
    exact = all(0.5 * (upsilon([u, -u]) + upsilon([-u, u])) == abs(u) / 2 for u in us)
    ok = worst <= 1e-12 and exact and time.perf_counter() - t0 < 10
    _report(capsys, 5, ok, f"max permutation-sum error {worst:.1e}, symmetrized Upsilon_2 exact: {exact}", t0)
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("ensemble", ["gue", "cue"])
def test_criterion_06_mesoscopic_clt(capsys, ensemble):
    t0 = time.perf_counter()
    rep = clt_experiment(ensemble, bump(), 0.1, 0.5, 400, 4000, seed=SEED, exact_max_N=0)
    ratio = rep.variance_ratio()
    z3, z4 = abs(rep.k3) / rep.se_k3, abs(rep.k4) / rep.se_k4
    ok = abs(ratio - 1) <= 0.15 and z3 <= 4 and z4 <= 4 and time.perf_counter() - t0 < 900
    _report(capsys, 6, ok, f"[{ensemble}] k2/||f||^2 = {ratio:.4f}, |k3|/SE = {z3:.2f}, |k4|/SE = {z4:.2f}", t0)
    assert ok


def test_criterion_07_variance_bounds(capsys):
    t0 = time.perf_counter()
    fs = [bump(), gaussian(), mollified_step(), g_t_function(1.0, 1.0), bump().scaled(2.0)]
    worst = 0.0
    for f in fs:
        norm = h_half_norm(f, "fourier" if f.fourier is not None else "double_integral")
        for N in (100, 200, 400):
            K = gue(N)
            for a in (0.3, 0.5, 0.8):
                worst = max(worst, variance_exact(K, f, 0.1, a) / norm)
    gworst = 0.0
    for h in (monomial(1), monomial(2), bump()):
        bound = 16 * sigma_tilde(h)
        for N in (100, 200, 400):
            gworst = max(gworst, variance_exact(gue(N), h.scaled(1 / math.sqrt(2)), 0.0, 0.0) / bound)
    ok = worst <= 32 and gworst <= 1 and time.perf_counter() - t0 < 600
    _report(capsys, 7, ok, f"max Var/||f||^2 = {worst:.4f} (<= 32), max global Var/(16 Sigma~^2) = {gworst:.4f}", t0)
    assert ok


def test_criterion_08_equilibrium_laws(capsys):
    t0 = time.perf_counter()
    g = sample_gue(2000, SeedStream(SEED)).points
    c = sample_chebyshev(500, SeedStream(SEED)).points
    d1 = stats.kstest(g, lambda x: semicircle().cdf(x) + 0.5).statistic
    d2 = stats.kstest(c, lambda x: arcsine().cdf(x) + 0.5).statistic
    ok = d1 < 0.05 and d2 < 0.05 and time.perf_counter() - t0 < 300
    _report(capsys, 8, ok, f"KS semicircle {d1:.4f}, KS arcsine {d2:.4f}", t0)
    assert ok


@pytest.mark.slow
def test_criterion_09_fbm_limit(capsys):
    t0 = time.perf_counter()
    p = FbmParams(eta=1.0, alpha=0.6, x0=0.0, grid=(0.5, 1.0, 2.0))
    rep = fbm_experiment(p, "gue", 400, 4000, seed=SEED, exact_mean_max_N=0)
    zmax = float(np.max(np.abs(rep.z_scores())))
    tri = 0.0
    for t in p.grid:
        closed = fbm_covariance(t, t, 1.0)
        f = g_t_function(t, 1.0)
        for v in (fbm_covariance_fourier(t, t, 1.0), h_half_norm(f, "fourier"), h_half_norm(f, "double_integral")):
            tri = max(tri, abs(v - closed) / closed)
    ok = zmax <= 4 and tri <= 1e-4 and time.perf_counter() - t0 < 900
    _report(capsys, 9, ok, f"max |z| = {zmax:.2f}, ||g_t||^2 three-route rel. spread {tri:.1e}", t0)
    assert ok


def test_criterion_10_unfolding(capsys):
    t0 = time.perf_counter()
    errs = []
    for N in (64, 256, 1024):
        fN = unfold_map(semicircle(), 0.1, 0.5, N).transform(bump())
        errs.append(math.sqrt(h_one_norm(fN - bump())))
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 1e-2 and time.perf_counter() - t0 < 60
    _report(capsys, 10, ok, "||f_N - f||_H1 = " + ", ".join(f"{e:.2e}" for e in errs), t0)
    assert ok
