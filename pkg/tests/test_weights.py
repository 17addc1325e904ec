import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mixnorm.weights import (
    DIAGNOSTIC_ITEMS,
    ExpWeight,
    LogWeight,
    StandardWeight,
    TabulatedWeight,
    WeightDomainError,
    beta_modulated,
    certify_lower_doubling,
    certify_upper_doubling,
    conjugate_exponent,
    doubling_diagnostics,
    empirical_alpha0,
    inverse_tail_diagnostic,
    load_weight,
    parse_weight,
    power_transform,
)

BUILTIN = ["std:0", "std:1", "std:2", "std:-0.5", "log:2", "log:3", "exp:1"]


def u_density(spec):
    """``u * omega`` at ``u = exp(-t)``, written out independently of the package."""
    kind, _, p = spec.partition(":")
    p = float(p)
    if kind == "std":
        # 1 - r^2 = u (2 - u)
        return lambda t: (p + 1) * math.exp(p * (math.log(2 - math.exp(-t)) - t) - t)
    if kind == "log":
        return lambda t: (1.0 + t) ** -p
    if kind == "exp":
        return lambda t: math.exp(-p * math.exp(t) - t) if t < 700 else 0.0
    raise ValueError(spec)


def quad_tail(spec, r):
    # u = 1 - r = exp(-t): slowly decaying log-type tails need the infinite range
    g = u_density(spec)
    t0 = -math.log(1.0 - r)
    val, _ = quad(g, t0, math.inf, limit=400, epsabs=0, epsrel=1e-12)
    return val


def test_density_examples():
    assert StandardWeight(0).density(0.5) == pytest.approx(1.0, abs=0)
    assert StandardWeight(1).density(0.0) == pytest.approx(2.0)
    assert LogWeight(2).density(1 - 1 / math.e) == pytest.approx(math.e / 4, rel=1e-14)


def test_tail_examples():
    assert StandardWeight(0).tail(0.5) == pytest.approx(0.5, rel=1e-15)
    assert StandardWeight(1).tail(0.0) == pytest.approx(4 / 3, rel=1e-14)
    w = LogWeight(2)
    for r in (0.0, 0.3, 0.9, 1 - 1e-9):
        assert w.tail(r) == pytest.approx(1 / math.log(math.e / (1 - r)), rel=1e-13)
    assert float(w.tail(1.0)) == 0.0


def test_domain_errors():
    with pytest.raises(WeightDomainError):
        StandardWeight(0).density(1.0)
    with pytest.raises(WeightDomainError):
        StandardWeight(0).density(-0.1)
    with pytest.raises(WeightDomainError):
        StandardWeight(-1.0)
    with pytest.raises(WeightDomainError):
        StandardWeight(0).moment(-1.0)
    with pytest.raises(WeightDomainError):
        parse_weight("nope:3")


@pytest.mark.parametrize("spec", BUILTIN)
def test_tail_matches_quadrature(spec):
    w = parse_weight(spec)
    for r in (0.0, 0.25, 0.5, 0.9, 0.99):
        assert abs(float(w.tail(r)) - quad_tail(spec, r)) <= 1e-10 * float(w.tail(0.0))


def test_moment_examples():
    assert StandardWeight(0).moment(1) == pytest.approx(0.5, rel=1e-15)
    assert StandardWeight(1).moment(3) == pytest.approx(1 / 6, rel=1e-14)
    assert StandardWeight(0).moment(0) == pytest.approx(1.0, rel=1e-15)


@pytest.mark.parametrize("spec", BUILTIN)
def test_moments_against_quadrature(spec):
    w = parse_weight(spec)
    g = u_density(spec)
    for x in (0.0, 1.0, 2.0, 5.0, 10.0, 101.0):
        # split at the bulk of r**x so quad sees both scales
        t_mid = math.log(x + 2.0)
        ref = sum(quad(lambda t: (-math.expm1(-t)) ** x * g(t), a, b, limit=400, epsabs=0, epsrel=1e-12)[0]
                  for a, b in ((0, t_mid), (t_mid, math.inf)))
        assert w.moment(x) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("spec", ["std:1", "log:2", "exp:1", "beta:log:2:1"])
def test_integration_by_parts_identity(spec):
    w = parse_weight(spec)
    for x in (1.0, 2.0, 5.0, 10.0):
        ref, _ = quad(lambda r: x * r ** (x - 1) * float(w.tail(r)), 0, 1, limit=400, epsrel=1e-12)
        assert w.moment(x) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("spec", BUILTIN)
def test_moments_strictly_decreasing(spec):
    m = parse_weight(spec).moments(np.linspace(0, 5000, 301))
    assert np.all(np.diff(m) < 0)


def test_large_moments_standard_closed_form():
    # nu_alpha: omega_x = (alpha+1) B((x+1)/2, alpha+1) / 2
    from scipy.special import beta

    for a in (0.0, 1.0, 2.5):
        w = StandardWeight(a)
        for x in (1e3, 1e6):
            assert w.moment(x) == pytest.approx((a + 1) * beta((x + 1) / 2, a + 1) / 2, rel=1e-12)


def test_beta_modulated_examples():
    w = beta_modulated(StandardWeight(0), 1)
    assert w.density(0.3) == pytest.approx(1 - 0.09, rel=1e-14)
    assert beta_modulated(StandardWeight(1), 1).moment(1) == pytest.approx(1 / 3, rel=1e-12)
    assert beta_modulated(StandardWeight(0), 2).moment(1) == pytest.approx(1 / 6, rel=1e-12)
    lw = beta_modulated(LogWeight(2), 1.5)
    ref, _ = quad(lambda r: r ** 3 * (1 - r * r) ** 1.5 * float(LogWeight(2).density(r)), 0, 1, limit=200)
    assert lw.moment(3) == pytest.approx(ref, rel=1e-9)


def test_power_transform_examples():
    w0 = StandardWeight(0)
    assert power_transform(w0, 1.0) is w0
    mu = power_transform(w0, 2.0)
    for r in (0.0, 0.4, 0.9):
        assert mu.density(r) == pytest.approx(1 - r, rel=1e-14)
        assert mu.tail(r) == pytest.approx((1 - r) ** 2 / 2, rel=1e-13)
    x = np.array([1.0, 10.0, 100.0])
    ratio = mu.moments(x) / w0.moments(x) ** 2
    # mu_x = 1/((x+1)(x+2)) and omega_x = 1/(x+1)
    assert np.allclose(ratio, (x + 1) / (x + 2), rtol=1e-12)


@pytest.mark.parametrize("spec", BUILTIN)
@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.0])
def test_power_transform_tail_identity(spec, alpha):
    w = parse_weight(spec)
    mu = power_transform(w, alpha)
    u = np.array([1.0, 0.7, 0.3, 0.05, 1e-3, 1e-9])
    # compared in logs: exponential tails underflow long before u = 1e-9
    ref = alpha * np.asarray(w.log_tail_u(u)) - math.log(alpha)
    got = np.asarray(mu.log_tail_u(u))
    assert np.allclose(np.exp(got - ref), 1.0, rtol=1e-10, atol=0)


def test_tabulated_weight(tmp_path):
    r = np.linspace(0, 1, 201)
    omega = 2 - r  # linear: interpolation is exact
    path = tmp_path / "w.csv"
    path.write_text("r,omega\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in zip(r, omega)) + "\n")
    w = parse_weight(f"file:{path}")
    assert isinstance(w, TabulatedWeight)
    assert w.tail(0.5) == pytest.approx(0.625, rel=1e-12)
    assert w.moment(1) == pytest.approx(2 / 3, rel=1e-12)
    assert w.moment(4) == pytest.approx(2 / 5 - 1 / 6, rel=1e-12)
    assert np.all(np.diff(w.tail(np.linspace(0, 0.99, 50))) <= 0)


def test_serialization_roundtrip():
    for spec in ["std:1", "log:2", "exp:1", "pow:std:0:2", "beta:log:2:1"]:
        w = parse_weight(spec)
        back = load_weight(json.dumps(w.to_dict()))
        assert back.spec() == w.spec()
        assert back.moment(7.0) == pytest.approx(w.moment(7.0), rel=1e-13)


def test_conjugate_exponent():
    assert conjugate_exponent(2) == 2
    assert conjugate_exponent(0.5) == math.inf
    assert conjugate_exponent(1) == math.inf
    assert conjugate_exponent(4) == pytest.approx(4 / 3)
    assert conjugate_exponent(math.inf) == 1
    with pytest.raises(WeightDomainError):
        conjugate_exponent(0)


def test_certify_upper():
    r = certify_upper_doubling(StandardWeight(0))
    assert r.certified and r.best_constant == pytest.approx(2.0, rel=1e-12)
    r = certify_upper_doubling(LogWeight(2))
    assert r.certified and r.best_constant == pytest.approx(1 + math.log(2), rel=1e-10)
    assert not certify_upper_doubling(ExpWeight(1)).certified


def test_certify_lower():
    r = certify_lower_doubling(StandardWeight(0), K=2)
    assert r.certified and r.best_constant == pytest.approx(2.0, rel=1e-12)
    r = certify_lower_doubling(StandardWeight(1), K=2)
    assert r.certified and 3.0 < r.best_constant <= 4.0
    assert not certify_lower_doubling(LogWeight(2), K=10).certified
    with pytest.raises(WeightDomainError):
        certify_lower_doubling(StandardWeight(0), K=1.0)


def test_class_report_json():
    d = certify_upper_doubling(ExpWeight(1)).to_dict()
    json.dumps(d, allow_nan=False)
    assert d["certified"] is False


def test_empirical_alpha0():
    assert empirical_alpha0(StandardWeight(0), C=1.0) == pytest.approx(1.0, abs=1e-9)
    assert empirical_alpha0(StandardWeight(1), C=1.0) == pytest.approx(2.0, abs=0.02)


def test_doubling_diagnostics_std0():
    reps = doubling_diagnostics(StandardWeight(0))
    assert [r.label.split()[0] for r in reps] == list(DIAGNOSTIC_ITEMS)
    assert all(r.verdict == "bounded" for r in reps)
    by = {r.label.split()[0]: r for r in reps}
    # omega_hat(1-1/x)/omega_x = (x+1)/x and omega_x/omega_2x = (2x+1)/(x+1)
    assert 1.0 < by["tail-moment"].ratio_min and by["tail-moment"].ratio_max <= 2.0 + 1e-12
    assert by["moment-doubling"].ratio_min >= 1.5 - 1e-12 and by["moment-doubling"].ratio_max < 2.0


def test_inverse_tail_diagnostic():
    rep = inverse_tail_diagnostic(StandardWeight(0))
    assert rep.verdict == "bounded" and rep.ratio_max <= 1.0 + 1e-9
    assert inverse_tail_diagnostic(StandardWeight(1), gamma=0.5).verdict == "bounded"
    assert inverse_tail_diagnostic(LogWeight(2)).verdict == "unbounded-trend"


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-0.9, 4.0), r=st.floats(0.0, 0.999))
def test_standard_tail_monotone_and_positive(a, r):
    w = StandardWeight(a)
    t1, t2 = float(w.tail(r)), float(w.tail(min(r + 1e-3, 0.9999)))
    assert t1 > 0 and t2 <= t1


@settings(max_examples=20, deadline=None)
@given(k=st.floats(1.2, 4.0), u=st.floats(1e-12, 0.9))
def test_log_tail_closed_form(k, u):
    w = LogWeight(k)
    L = math.log(math.e / u)
    assert float(w.tail_u(u)) == pytest.approx(1 / ((k - 1) * L ** (k - 1)), rel=1e-12)
