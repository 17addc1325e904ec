import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixnorm.blocks import (
    BlockError,
    CutoffSpec,
    block_norms,
    block_project,
    build_block_basis,
    build_schedule,
    build_vnk,
    choose_K,
    decomposition_norm,
    inner_norm,
    is_lacunary,
    lqs_norm,
)
from mixnorm.diskfn import WITHOUT_R, AnalyticPoly, NormSpec, hardy_norm, space_norm_Xq
from mixnorm.weights import ExpWeight, LogWeight, StandardWeight


@pytest.fixture(scope="module")
def dyadic():
    return build_block_basis(build_schedule(StandardWeight(0), 2.0, 14), 1)


def test_cutoff_profile():
    cut = CutoffSpec(2)
    t = np.array([-3.0, 0.0, 1.0, 1.5, 2.0, 7.0])
    v = cut.psi(t)
    assert list(v[[0, 1, 2]]) == [1.0, 1.0, 1.0] and list(v[[4, 5]]) == [0.0, 0.0]
    assert v[3] == pytest.approx(0.5)  # symmetric profile
    assert np.all(np.diff(cut.psi(np.linspace(0, 3, 301))) <= 0)
    with pytest.raises(BlockError):
        CutoffSpec(1)


def test_schedule_std0_closed_forms():
    s = build_schedule(StandardWeight(0), 2.0, 12)
    assert s.M_seq == tuple(2 ** n for n in range(13))
    assert s.lacunary_ratio == 2.0
    assert np.allclose(s.r_seq, [1 - 2.0 ** -n for n in range(13)], rtol=0, atol=1e-14)
    assert build_schedule(StandardWeight(0), 4.0, 8).M_seq == tuple(4 ** n for n in range(9))


def test_schedule_log_closed_form():
    s = build_schedule(LogWeight(2), math.e, 6)
    # log(e/(1-r_n)) = e^n, and M_n = floor(e^{e^n - 1}) until 1 - r_n underflows the cutoff
    ref = [math.floor(math.exp(math.exp(n) - 1)) for n in range(len(s.M_seq))]
    assert list(s.M_seq) == ref
    assert s.truncated and len(s.M_seq) == 4


def test_schedule_errors():
    with pytest.raises(BlockError):
        build_schedule(StandardWeight(0), 1.0)
    with pytest.raises(BlockError):
        build_schedule(StandardWeight(0), 2.0, 0)


def test_is_lacunary():
    assert is_lacunary([2 ** n for n in range(12)]) == (True, 2.0)
    ok, r = is_lacunary([n + 1 for n in range(50)])
    assert not ok and r < 1.03
    assert is_lacunary(build_schedule(StandardWeight(0), 3.03, 10).M_seq[1:])[0]
    # ratios creeping toward 1
    assert not is_lacunary([int(10 * 1.5 ** (n ** 0.5)) + n for n in range(1, 30)])[0]
    with pytest.raises(BlockError):
        is_lacunary([])


def test_choose_K():
    assert choose_K(StandardWeight(0)) == pytest.approx(3.03, rel=1e-9)
    assert choose_K(StandardWeight(1)) == pytest.approx(9.09, rel=0.01)
    for w in (StandardWeight(0.5), LogWeight(2)):
        assert choose_K(w) > float(w.tail(0.0)) / float(w.tail(0.5))
    with pytest.raises(BlockError):
        choose_K(ExpWeight(1))


def test_vnk_support_and_telescoping():
    cut = CutoffSpec(2)
    for n in range(1, 8):
        c = build_vnk(cut, n).coeffs.real
        j = np.arange(c.size)
        assert np.all(c[j < 2 ** (n - 1)] == 0)
        assert c.size <= 2 ** (n + 1)
    m = 9
    total = np.zeros(2 ** (m + 1))
    for n in range(m + 1):
        c = build_vnk(cut, n).coeffs.real
        total[: c.size] += c
    assert np.allclose(total[: 2 ** (m - 1)], 1.0, rtol=0, atol=1e-15)


def test_partition_of_unity_and_supports(dyadic):
    for basis in (dyadic, build_block_basis(build_schedule(StandardWeight(1), choose_K(StandardWeight(1)), 10), 2)):
        j = np.arange(basis.coverage + 1)
        total = sum(basis.window(n, j) for n in range(basis.n_windows))
        assert np.allclose(total, 1.0, rtol=0, atol=1e-15)
        for n in range(1, basis.n_windows):
            lo, hi = basis.support(n)
            v = basis.window(n, [lo - 1, hi])
            assert v[0] == 0 and v[1] == 0
            assert np.all((basis.window(n, j) >= 0) & (basis.window(n, j) <= 1))


def test_dyadic_windows_match_vnk(dyadic):
    cut = CutoffSpec(2)
    for n in range(1, 10):
        v = build_vnk(cut, n).coeffs.real
        j = np.arange(2 ** (n + 1))
        ref = np.zeros(j.size)
        ref[: v.size] = v
        assert np.allclose(dyadic.window(n, j), ref, rtol=0, atol=1e-15)
        lo, hi = dyadic.support(n)
        assert (lo, hi) == (2 ** (n - 1), 2 ** (n + 1))


def test_block_project_examples(dyadic):
    # j = 8 = M_3 is where window 3 reaches 1 and window 4 starts ramping up
    f = AnalyticPoly.monomial(8)
    assert block_project(dyadic, 3, f) == f
    assert block_project(dyadic, 2, AnalyticPoly.monomial(8)).is_zero
    g = AnalyticPoly(np.random.default_rng(3).standard_normal(300))
    acc = np.zeros(g.coeffs.size, dtype=complex)
    for n in dyadic.windows_for_degree(g.degree):
        c = block_project(dyadic, n, g).coeffs
        acc[: c.size] += c
    assert np.allclose(acc, g.coeffs, rtol=0, atol=1e-14)
    with pytest.raises(BlockError):
        dyadic.windows_for_degree(dyadic.coverage + 1)
    with pytest.raises(BlockError):
        dyadic.window(dyadic.n_windows, 0)


def test_decomposition_examples(dyadic):
    assert decomposition_norm(AnalyticPoly([1]), dyadic, 2) == pytest.approx(1.0, rel=1e-15)
    spec = NormSpec(2, StandardWeight(0), "hp", 2, WITHOUT_R)
    assert space_norm_Xq(AnalyticPoly([1]), spec) == pytest.approx(1.0, rel=1e-12)
    # z^8 sits only in window 3 where P_3 = 1
    for q in (0.5, 1, 2, math.inf):
        ref = 2.0 ** (-3 / q) if math.isfinite(q) else 2.0 ** -3
        assert decomposition_norm(AnalyticPoly.monomial(8), dyadic, q) == pytest.approx(ref, rel=1e-13)
    with pytest.raises(BlockError):
        decomposition_norm(AnalyticPoly([1]), dyadic, 0)
    with pytest.raises(BlockError):
        inner_norm(AnalyticPoly([1]), "lp")


def test_lqs_examples(dyadic):
    g = AnalyticPoly(np.random.default_rng(4).standard_normal(200))
    b = block_norms(g, dyadic)
    assert lqs_norm(g, dyadic, 0, math.inf) == pytest.approx(float(np.max(b)))
    for q in (0.5, 2, 3):
        s = math.log2(dyadic.schedule.K) / q
        assert lqs_norm(g, dyadic, s, q, norms=b) == pytest.approx(decomposition_norm(g, dyadic, q, norms=b), rel=1e-13)
    z = AnalyticPoly([0, 1])
    terms = [hardy_norm(block_project(dyadic, n, z), 2) for n in dyadic.windows_for_degree(1)]
    ref = math.sqrt(sum((2 ** (-n / 2) * t) ** 2 for n, t in enumerate(terms)))
    assert lqs_norm(z, dyadic, 0.5, 2) == pytest.approx(ref, rel=1e-15)


def test_json_export(dyadic):
    d = json.loads(dyadic.to_json(max_degree=64))
    assert d["N"] == 1 and d["M_seq"][:4] == [1, 2, 4, 8]
    for n, win in enumerate(d["windows"]):
        for j, v in win:
            assert dyadic.window(n, j) == pytest.approx(v, abs=0)
    sched = json.loads(json.dumps(dyadic.schedule.to_dict()))
    assert sched["lacunary_ratio"] == 2.0


@settings(max_examples=25, deadline=None)
@given(K=st.floats(2.5, 12.0), deg=st.integers(0, 5000))
def test_windows_sum_to_one(K, deg):
    basis = build_block_basis(build_schedule(StandardWeight(0), K, 8), 1)
    deg = min(deg, basis.coverage)
    j = np.arange(deg + 1)
    acc = sum(basis.window(n, j) for n in basis.windows_for_degree(deg))
    assert np.allclose(acc, 1.0, rtol=0, atol=1e-15)
