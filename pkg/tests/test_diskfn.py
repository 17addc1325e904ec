import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mixnorm.diskfn import (
    WITH_R,
    WITHOUT_R,
    AnalyticPoly,
    DiskDomainError,
    NormSpec,
    PolarSamples,
    bloch_norm,
    bmoa_norm,
    cesaro_mean,
    circle_samples,
    dilate,
    hadamard,
    hardy_norm,
    integral_mean,
    mean_profile,
    mixed_norm,
    mixed_norm_weak,
    space_norm_Xq,
)
from mixnorm.weights import LogWeight, StandardWeight, parse_weight

Z = AnalyticPoly([0, 1])
ONE = AnalyticPoly([1])

coeff_lists = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                       min_size=1, max_size=40)


def test_poly_normalization_and_eval():
    f = AnalyticPoly([1, 2, 0, 0])
    assert f.degree == 1 and f.coeffs.size == 2
    assert AnalyticPoly([0, 0]).degree == 0 and AnalyticPoly([0]).is_zero
    assert f(0.5) == pytest.approx(2.0)
    assert AnalyticPoly.parse("1,1") == AnalyticPoly([1, 1])
    g = AnalyticPoly([1 + 2j, -3])
    assert AnalyticPoly.from_json(g.to_json()) == g
    assert AnalyticPoly.parse(g.to_json()) == g
    with pytest.raises(DiskDomainError):
        AnalyticPoly.parse("1,x")


def test_circle_samples_rule():
    assert circle_samples(0) == 256
    assert circle_samples(31) == 256
    assert circle_samples(32) == 512
    assert circle_samples(1000) == 8192


def test_integral_mean_examples():
    assert integral_mean(Z, 0.7, 2) == pytest.approx(0.7, rel=1e-15)
    for r in (0.0, 0.4, 0.9):
        assert integral_mean(AnalyticPoly([1, 1]), r, 2) == pytest.approx(math.sqrt(1 + r * r), rel=1e-14)
    assert integral_mean(Z, 0.3, math.inf) == pytest.approx(0.3, rel=1e-15)


def test_integral_mean_p1_closed_form():
    # M_1(r, 1+z) = (2/pi)(1+r) E(2 sqrt(r)/(1+r))
    from scipy.special import ellipe

    for r, tol in ((0.2, 1e-13), (0.7, 1e-13), (0.99, 1e-5)):
        k = 2 * math.sqrt(r) / (1 + r)
        ref = 2 / math.pi * (1 + r) * ellipe(k * k)
        # the zero at -1/r sits close to the circle at r = 0.99: 256 angles converge slowly there
        assert integral_mean(AnalyticPoly([1, 1]), r, 1) == pytest.approx(ref, rel=tol)


def test_polar_samples_means_and_csv(tmp_path):
    f = AnalyticPoly([1, 0.5, 0.25j])
    ps = PolarSamples.from_function(f, [0.0, 0.5, 0.9], 64)
    for r in (0.0, 0.5, 0.9):
        assert integral_mean(ps, r, 2) == pytest.approx(integral_mean(f, r, 2), rel=1e-13)
        assert integral_mean(ps, r, 1) == pytest.approx(integral_mean(f, r, 1), rel=1e-12)
    with pytest.raises(DiskDomainError):
        integral_mean(ps, 0.6, 2)
    path = tmp_path / "s.csv"
    ps.to_csv(path)
    back = PolarSamples.from_csv(path)
    assert np.array_equal(back.radii, ps.radii) and np.array_equal(back.values, ps.values)
    with pytest.raises(DiskDomainError):
        PolarSamples(np.array([0.5, 0.2]), np.zeros((2, 8)))
    with pytest.raises(DiskDomainError):
        PolarSamples(np.array([0.2]), np.zeros((1, 6)))


def test_mixed_norm_examples():
    w0 = StandardWeight(0)
    for k in (0, 1, 5):
        assert mixed_norm(AnalyticPoly.monomial(k), w0, 2, 2) == pytest.approx(math.sqrt(1 / (2 * k + 2)), rel=1e-12)
    assert mixed_norm(AnalyticPoly([1, 1]), w0, 2, 2, WITH_R) == pytest.approx(math.sqrt(3) / 2, rel=1e-12)
    lw = LogWeight(2)
    for p, q in ((1, 3), (2, 0.5), (4, 2)):
        assert mixed_norm(ONE, lw, p, q) == pytest.approx(lw.moment(1) ** (1 / q), rel=1e-10)
    assert mixed_norm(AnalyticPoly([0]), w0, 2, 2) == 0.0
    with pytest.raises(DiskDomainError):
        mixed_norm(ONE, w0, 2, math.inf)


def test_mixed_norm_quadrature_oracle():
    f = AnalyticPoly([1, -0.5, 0.3j, 0.2])
    w = StandardWeight(1)
    for p, q, conv in ((1, 1, WITH_R), (3, 2, WITHOUT_R), (0.5, 1.5, WITH_R)):
        fac = (lambda r: r) if conv == WITH_R else (lambda r: 1.0)
        ref = quad(lambda r: integral_mean(f, r, p) ** q * fac(r) * float(w.density(r)), 0, 1,
                   epsabs=0, epsrel=1e-12)[0] ** (1 / q)
        assert mixed_norm(f, w, p, q, conv) == pytest.approx(ref, rel=1e-9)


def test_mixed_norm_polar_samples():
    f = AnalyticPoly([1, 1])
    ps = PolarSamples.on_gl_grid(f, [0, 0.5, 1.0 - 1e-12], 64, order=24)
    assert mixed_norm(ps, StandardWeight(0), 2, 2) == pytest.approx(math.sqrt(3) / 2, rel=1e-10)


def test_weak_norm():
    w0, w1 = StandardWeight(0), StandardWeight(1)
    assert mixed_norm_weak(ONE, w0, 2) == pytest.approx(1.0, rel=1e-12)
    assert mixed_norm_weak(Z, w0, 2) == pytest.approx(0.25, rel=1e-10)
    r = np.linspace(0, 1, 200001)
    brute = np.max(r * w1.tail(r))
    assert mixed_norm_weak(Z, w1, math.inf) == pytest.approx(brute, rel=1e-8)


def test_space_norm_examples():
    w0 = StandardWeight(0)
    assert space_norm_Xq(ONE, NormSpec(2, w0, "hp", 2)) == pytest.approx(1.0, rel=1e-12)
    assert space_norm_Xq(Z, NormSpec(2, w0, "hp", 2)) == pytest.approx(1 / math.sqrt(3), rel=1e-12)
    assert space_norm_Xq(Z, NormSpec(math.inf, w0, "bloch")) == pytest.approx(0.25, rel=1e-8)
    with pytest.raises(DiskDomainError):
        NormSpec(2, w0, "lp")
    with pytest.raises(DiskDomainError):
        NormSpec(0, w0)


def test_hardy_norm():
    for p in (0.5, 1, 2, math.inf):
        assert hardy_norm(AnalyticPoly.monomial(7), p) == pytest.approx(1.0, rel=1e-13)
    assert hardy_norm(AnalyticPoly([1, 1]), 2) == pytest.approx(math.sqrt(2), rel=1e-14)
    assert hardy_norm(AnalyticPoly([1, 1]), math.inf) == pytest.approx(2.0, rel=1e-14)
    # |1 + e^{it}| has a kink at t = pi, so the trapezoid error is O(N^-2) rather than spectral
    assert hardy_norm(AnalyticPoly([1, 1]), 1) == pytest.approx(4 / math.pi, rel=2e-5)
    assert hardy_norm(AnalyticPoly([2, 1]), 1) == pytest.approx(
        quad(lambda t: abs(2 + np.exp(1j * t)), 0, 2 * math.pi, epsrel=1e-13)[0] / (2 * math.pi), rel=1e-13)


def test_bloch_norm():
    assert bloch_norm(ONE) == 1.0
    assert bloch_norm(Z) == pytest.approx(1.0, rel=1e-12)
    assert bloch_norm(AnalyticPoly([0, 0, 1])) == pytest.approx(4 / (3 * math.sqrt(3)), rel=1e-8)


def test_bmoa_norm():
    assert bmoa_norm(AnalyticPoly([3 - 4j])) == pytest.approx(5.0)
    assert bmoa_norm(Z) == pytest.approx(1.0, rel=1e-9)
    # regression pin
    assert bmoa_norm(AnalyticPoly([0, 0, 1])) == pytest.approx(1.0, rel=1e-6)


def test_transforms():
    f = AnalyticPoly([1, 1, 1])
    assert hadamard(f, f) == f
    assert hadamard(AnalyticPoly([1, 2]), AnalyticPoly([3, 5])) == AnalyticPoly([3, 10])
    assert hadamard(f, AnalyticPoly([0])).is_zero
    assert dilate(f, 1) == f
    assert dilate(AnalyticPoly([0, 0, 1]), 0.5) == AnalyticPoly([0, 0, 0.25])
    assert dilate(AnalyticPoly([1, 1]), 1j) == AnalyticPoly([1, 1j])
    with pytest.raises(DiskDomainError):
        dilate(f, 1.5)
    assert cesaro_mean(AnalyticPoly([1, 1]), 1) == AnalyticPoly([1, 0.5])
    assert cesaro_mean(AnalyticPoly.monomial(3), 1).is_zero


@settings(max_examples=40, deadline=None)
@given(c=coeff_lists, r=st.floats(0.0, 0.999))
def test_parseval(c, r):
    f = AnalyticPoly(c)
    k = np.arange(f.coeffs.size)
    ref = float(np.sum(np.abs(f.coeffs) ** 2 * r ** (2 * k)))
    m_fft = mean_profile(f, [r], 2, fast_parseval=False)[0] ** 2
    assert abs(m_fft - ref) <= 1e-12 * max(ref, 1e-300) + 1e-300


@settings(max_examples=25, deadline=None)
@given(c=coeff_lists, p=st.sampled_from([0.5, 1.0, 2.0, math.inf]))
def test_mean_monotone_in_r(c, p):
    f = AnalyticPoly(c)
    m = mean_profile(f, np.linspace(0, 1, 41), p)
    assert np.all(np.diff(m) >= -1e-12 * np.max(m))


@settings(max_examples=25, deadline=None)
@given(c=coeff_lists, s=st.complex_numbers(max_magnitude=1.0, allow_nan=False),
       p=st.sampled_from([1.0, 2.0, math.inf]))
def test_dilation_contractive(c, s, p):
    f = AnalyticPoly(c)
    assert hardy_norm(dilate(f, s), p) <= hardy_norm(f, p) * (1 + 1e-12) + 1e-300


@settings(max_examples=20, deadline=None)
@given(c=coeff_lists, n=st.integers(0, 80))
def test_cesaro_contractive_h1(c, n):
    # Fejer kernel is a positive summability kernel of mass one
    f = AnalyticPoly(c)
    assert hardy_norm(cesaro_mean(f, n), 1) <= hardy_norm(f, 1) * (1 + 1e-12)


@pytest.mark.parametrize("spec", ["std:0", "std:1", "log:2", "exp:1"])
def test_norm_identity_builtin(spec):
    w = parse_weight(spec)
    rng = np.random.default_rng(7)
    for _ in range(5):
        d = int(rng.integers(0, 65))
        f = AnalyticPoly(rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1))
        k = np.arange(f.coeffs.size)
        ref = float(np.sum(np.abs(f.coeffs) ** 2 * w.moments(2.0 * k + 1)))
        assert mixed_norm(f, w, 2, 2) ** 2 == pytest.approx(ref, rel=1e-9)
