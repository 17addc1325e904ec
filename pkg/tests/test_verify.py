import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mixnorm.blocks import build_block_basis, build_schedule
from mixnorm.diskfn import AnalyticPoly, DiskDomainError, cesaro_mean, hardy_norm
from mixnorm.ratios import extend_radial_grid, radial_grid
from mixnorm.verify import (
    TestFamily,
    block_multiplier_check,
    cesaro_ratios,
    convention_equivalence_check,
    decomposition_equivalence_check,
    holder_pairing_check,
    pairing_A2,
    pairing_small_p,
    parallel_map,
    random_polys,
    ratio_sweep,
    report_from_samples,
)
from mixnorm.weights import StandardWeight

W0 = StandardWeight(0)
ONE, Z = AnalyticPoly([1]), AnalyticPoly([0, 1])


def test_ratio_sweep_trivial():
    g = radial_grid(40)
    rep = ratio_sweep(lambda t: 1 / (1 - t), lambda t: 1 / (1 - t), g)
    assert (rep.ratio_min, rep.ratio_max, rep.verdict) == (1.0, 1.0, "bounded")
    rep = ratio_sweep(lambda t: 2 * t + 2, lambda t: t + 1, g)
    assert rep.ratio_min == pytest.approx(2.0) and rep.ratio_max == pytest.approx(2.0)
    rep = ratio_sweep(lambda t: math.log(1 / (1 - t)), lambda t: 1.0, g[1:])
    assert rep.verdict == "unbounded-trend"


def test_ratio_report_rules():
    pts = [0, 1, 2]
    rep = report_from_samples((pts, [1, 2, 3], [1, 1, 1]), (pts + [3], [1, 2, 3, 3.5], [1, 1, 1, 1]))
    assert rep.verdict == "unconverged" and rep.stability == pytest.approx(0.5 / 3)
    rep = report_from_samples((pts, [1, 1, 0], [1, 1, 0]), (pts, [1, 1, 0], [1, 1, 0]))
    assert rep.excluded == 1 and rep.n_points == 2
    empty = report_from_samples(([], [], []), ([], [], []))
    assert empty.verdict == "unconverged"
    # a one-sided report ignores a shrinking minimum
    up = report_from_samples(([0], [1], [1]), ([0, 1], [1, 0.1], [1, 1]), side="upper")
    assert up.verdict == "bounded" and up.extra == {"side": "upper"}
    u_last = 1 - extend_radial_grid([0.0, 0.75])[-1]
    assert 0.25 ** 3 <= u_last < 0.25 ** 3 * 2 ** 0.25


def test_pairing_examples():
    assert pairing_A2(W0, ONE, ONE) == pytest.approx(0.5)
    assert pairing_A2(W0, Z, ONE) == 0
    assert pairing_A2(W0, Z, Z) == pytest.approx(0.25)
    f, g = AnalyticPoly([1, 2j]), AnalyticPoly([3, 1])
    assert pairing_A2(W0, f, g) == pytest.approx(np.conj(pairing_A2(W0, g, f)))


def test_pairing_small_p():
    assert pairing_small_p(W0, ONE, ONE, 0.5, 2) == pytest.approx(0.25, rel=1e-12)
    assert pairing_small_p(W0, Z, AnalyticPoly([1, 0, 1]), 0.5, 2) == 0
    # q = 1/2: moments of omega omega_hat^2 = (1-r)^2 against nu_0
    ref = quad(lambda r: r ** 3 * (1 - r) ** 2, 0, 1, epsrel=1e-13)[0] * 0.25
    assert pairing_small_p(W0, Z, Z, 0.5, 0.5) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(DiskDomainError):
        pairing_small_p(W0, ONE, ONE, 1.0, 2)


def test_holder_examples():
    assert holder_pairing_check(W0, 2, 2, AnalyticPoly([0]), Z) == (0.0, 0.0)
    for k in (0, 3, 10):
        zk = AnalyticPoly.monomial(k)
        lhs, rhs = holder_pairing_check(W0, 2, 2, zk, zk)
        # equality case of Cauchy-Schwarz in the WITH_R measure
        assert lhs == pytest.approx(1 / (2 * k + 2), rel=1e-12)
        assert lhs <= rhs * (1 + 1e-12)
    with pytest.raises(DiskDomainError):
        holder_pairing_check(W0, 1, 2, ONE, ONE)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), p=st.sampled_from([2.0, 3.0, 1.5]), q=st.sampled_from([2.0, 1.5, 4.0]))
def test_holder_random(seed, p, q):
    f, g = random_polys(seed, 2, 12)
    lhs, rhs = holder_pairing_check(W0, p, q, f, g)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31), a=st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_pairing_sesquilinear(seed, a):
    f, g, h = random_polys(seed, 3, 10, exact_degree=True)
    lhs = pairing_A2(W0, AnalyticPoly(a * f.coeffs + h.coeffs), g)
    rhs = a * pairing_A2(W0, f, g) + pairing_A2(W0, h, g)
    assert abs(lhs - rhs) <= 1e-12 * (1 + abs(rhs) + abs(a) * abs(pairing_A2(W0, f, g)))


def test_random_polys_seeded():
    a, b = random_polys(5, 4, 20), random_polys(5, 4, 20)
    assert all(x == y for x, y in zip(a, b))
    assert all(p.degree == 20 for p in random_polys(1, 3, 20, exact_degree=True))


def test_family_composition():
    M = [2 ** n for n in range(14)]
    fam = TestFamily.build(3, M, cap=1024)
    assert len(fam) == 60
    assert fam.kinds.count("random") == 40 and fam.kinds.count("kernel") == 5
    assert max(f.degree for f in fam) <= 1024
    mono = [f for f, k in zip(fam, fam.kinds) if k == "monomial"]
    assert [f.degree for f in mono] == M[:10]
    again = TestFamily.build(3, M, cap=1024)
    assert all(x == y for x, y in zip(fam, again))


def test_convention_check_constant():
    fam = TestFamily([0], 1, [ONE], ["x"])
    rep = convention_equivalence_check(W0, 2, 2, fam)
    # omega_1^{1/q} / omega_0^{1/q}
    assert rep.ratio_min == pytest.approx(math.sqrt(0.5), rel=1e-12) and rep.ratio_min < 1
    zero = TestFamily([0], 1, [AnalyticPoly([0])], ["x"])
    assert convention_equivalence_check(W0, 2, 2, zero).excluded == 1


def test_decomposition_check_single_block():
    basis = build_block_basis(build_schedule(W0, 2.0, 12), 1)
    fam = TestFamily([0], 64, [AnalyticPoly.monomial(8)], ["x"])
    rep = decomposition_equivalence_check(W0, basis, 2.0, fam)
    # 2^-3 against int_0^1 r^16 dr
    assert rep.ratio_min == pytest.approx(2.0 ** -3 * 17, rel=1e-10)


def test_block_multiplier_small():
    basis = build_block_basis(build_schedule(W0, 2.0, 12), 1)
    fam = TestFamily([0], 256, [AnalyticPoly.monomial(2 ** n) for n in range(1, 8)], ["m"] * 7)
    mom, geo = block_multiplier_check(W0, 1.0, basis, fam)
    # alpha = 1: mu = omega, so LHS = omega_{2M_n + 1} against omega_{M_n}
    lhs = [1 / (2 * 2 ** n + 2) for n in range(1, 8)]
    rhs = [1 / (2 ** n + 1) for n in range(1, 8)]
    ratios = np.array(lhs) / np.array(rhs)
    assert mom.ratio_min == pytest.approx(ratios.min(), rel=1e-10)
    assert mom.ratio_max == pytest.approx(ratios.max(), rel=1e-10)
    assert mom.verdict == "bounded" and geo.verdict == "bounded"
    only0 = TestFamily([0], 1, [ONE], ["c"])
    rep, _ = block_multiplier_check(W0, 1.0, basis, only0)
    assert rep.n_points == 1 and rep.ratio_min == pytest.approx(1.0, rel=1e-12)


def test_cesaro_ratios():
    f = AnalyticPoly([1, 1])
    r = cesaro_ratios([f], 3, p=2)
    assert r[0, 0] == pytest.approx(1 / math.sqrt(2))
    assert r[0, 1] == pytest.approx(math.sqrt(1.25) / math.sqrt(2))
    polys = random_polys(2, 10, 30)
    r1 = cesaro_ratios(polys, 40, p=1)
    assert np.all(r1 <= 1 + 1e-12)
    for n in (0, 7, 40):
        assert r1[3, n] == pytest.approx(hardy_norm(cesaro_mean(polys[3], n), 1) / hardy_norm(polys[3], 1), rel=1e-12)


def test_parallel_map_ordered(monkeypatch):
    monkeypatch.setenv("MIXNORM_THREADS", "4")
    assert parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    monkeypatch.setenv("MIXNORM_THREADS", "bogus")
    assert parallel_map(str, [1, 2]) == ["1", "2"]
