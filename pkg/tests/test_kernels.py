import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meso_dpp.errors import BulkExitError, DomainError
from meso_dpp.kernels import (
    arcsine,
    chebyshev,
    chebyshev_kernel,
    cue,
    cue_kernel,
    gue,
    gue_kernel,
    kernel_error_scan,
    semicircle,
    sine,
    sine_approx,
    sine_kernel,
)
from meso_dpp.orthopoly import chebyshev_basis, hermite_basis
from meso_dpp.kernels import cd_kernel

# independent oracles (mpmath, 50 digits)
GUE_K100_00 = 0.44903418696355900148
CHEB_K64 = 20.47421445831559575
SINE_APPROX_SC = 0.14490526483909650492


def test_gue_diagonal_oracle():
    assert gue_kernel(100, 0.0, 0.0) / 100 == pytest.approx(GUE_K100_00, rel=1e-13)


def test_chebyshev_kernel_oracle():
    assert chebyshev_kernel(64, 0.1, 0.101) == pytest.approx(CHEB_K64, rel=1e-12)


def test_sine_approx_oracle():
    v = sine_approx(semicircle(), 256, 0.5, 0.1, 1.0, -1.0)
    assert v == pytest.approx(SINE_APPROX_SC, rel=1e-12)


@pytest.mark.parametrize("make", [gue, chebyshev])
@pytest.mark.parametrize("N", [1, 2, 7, 20])
def test_trace_and_reproducing(make, N):
    K = make(N)
    lo, hi = K.essential_support()
    z, w = K.rule(lo, hi)
    diag = K.diag(z)
    assert np.dot(w, diag) == pytest.approx(N, abs=1e-8)
    pts = np.array([-0.6, -0.1, 0.0, 0.35, 0.8]) * (1.0 if K.family == "chebyshev" else 1.2)
    Kxz = K.matrix(pts, z)
    rep = (Kxz * w) @ Kxz.T
    direct = np.array([[K(a, b) for b in pts] for a in pts])
    assert np.max(np.abs(rep - direct)) < 1e-7


def test_cue_trace_and_reproducing():
    K = cue(9)
    z, w = K.rule(0.0, 2 * math.pi)
    assert np.dot(w, K.diag(z)) == pytest.approx(9, abs=1e-10)
    Kxz = K.matrix(np.array([0.3, 2.0]), z)
    rep = (Kxz * w) @ Kxz.T
    assert rep[0, 1] == pytest.approx(cue_kernel(9, 0.3, 2.0), abs=1e-10)


@pytest.mark.parametrize("make", [gue, cue, chebyshev])
def test_matrix_matches_closed_form(make):
    K = make(17)
    x = np.array([-0.7, -0.2, 0.05, 0.4, 0.9])
    M = K.matrix(x)
    closed = K(x[:, None], x[None, :])
    assert np.max(np.abs(M - closed)) < 1e-10 * max(1.0, np.max(np.abs(M)))


def test_quotient_and_direct_sum_agree():
    B = hermite_basis()
    x = np.linspace(-5, 5, 41)
    y = x + 3e-3
    q = cd_kernel(B, 30, x, y, delta_switch=0.0)
    d = cd_kernel(B, 30, x, y, delta_switch=1.0)
    assert np.max(np.abs(q - d)) < 1e-10
    C = chebyshev_basis(128)
    x = np.linspace(-0.95, 0.95, 31)
    assert np.max(np.abs(cd_kernel(C, 40, x, x + 1e-3) - chebyshev_kernel(40, x, x + 1e-3))) < 1e-9


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 12))
@settings(max_examples=60, deadline=None)
def test_cue_periodicity(x, y, N):
    shifted = cue_kernel(N, x + 2 * math.pi, y)
    base = cue_kernel(N, x, y)
    if N % 2 == 1:
        assert shifted == pytest.approx(base, abs=1e-9)
    else:
        assert shifted == pytest.approx(-base, abs=1e-9)
    assert cue_kernel(N, x, y) == pytest.approx(cue_kernel(N, y, x), abs=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=60, deadline=None)
def test_sine_kernel_symmetric_and_bounded(a, b):
    v = sine_kernel(1.3, a, b)
    assert v == sine_kernel(1.3, b, a)
    assert abs(v) <= 1.3 + 1e-15


def test_sine_kernel_diagonal_continuity():
    assert sine_kernel(0.7, 0.2, 0.2) == 0.7
    assert sine_kernel(0.7, 0.2, 0.2 + 1e-7) == pytest.approx(0.7, rel=1e-12)
    assert sine(0.7)(0.0, 0.0) == 0.7


def test_equilibrium_measures():
    for m, hi in ((semicircle(), math.sqrt(2)), (arcsine(), 1.0)):
        q = np.linspace(-0.49, 0.49, 21)
        assert np.max(np.abs(m.cdf(m.quantile(q)) - q)) < 1e-13
        assert m.cdf(0.0) == 0.0
        assert m.cdf(hi) == pytest.approx(0.5, abs=1e-15)
        x = np.linspace(-0.9 * hi, 0.9 * hi, 9)
        h = 1e-6
        fd = (m.cdf(x + h) - m.cdf(x - h)) / (2 * h)
        np.testing.assert_allclose(fd, m.density(x), rtol=1e-7)


def test_sine_approx_diagonal_and_bulk_exit():
    m = semicircle()
    v = sine_approx(m, 100, 0.5, 0.0, 0.3, 0.3)
    assert v == pytest.approx(100**0.5 * m.density(0.3 / 10), rel=1e-14)
    with pytest.raises(BulkExitError):
        sine_approx(m, 4, 0.5, 1.3, 1.0, 0.0)
    with pytest.raises(DomainError):
        sine_approx(m, 100, 0.0, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("x0", [0.0, 0.5])
def test_gue_error_scan_rate(alpha, x0):
    s = kernel_error_scan("gue", alpha, x0, 1.0, [64, 128, 256, 512], grid=21)
    assert abs(s.slope + alpha) <= 0.2
    assert all(b < a for a, b in zip(s.errors, s.errors[1:]))


def test_error_scan_validation():
    with pytest.raises(DomainError):
        kernel_error_scan("cue", 0.5, 0.0, 1.0, [64, 128, 256])
    with pytest.raises(DomainError):
        kernel_error_scan("gue", 0.5, 0.0, 1.0, [128, 64, 256])
    with pytest.raises(BulkExitError):
        kernel_error_scan("chebyshev", 0.1, 0.99, 3.0, [4, 8, 16])


def test_kernel_constructor_validation():
    for make in (gue, cue, chebyshev):
        with pytest.raises(DomainError):
            make(0)
    with pytest.raises(DomainError):
        chebyshev_kernel(5, 1.0, 0.0)
    with pytest.raises(DomainError):
        sine(0.0)
