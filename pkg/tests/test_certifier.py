import json
import time
from fractions import Fraction as Q

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from maxwell_morawetz import certifier as C
from maxwell_morawetz.certifier import Interval, eval_interval, r_sym
from maxwell_morawetz.superenergy import bulk_coefficients


@pytest.fixture(scope="module")
def reports():
    start = time.perf_counter()
    reps = C.certify_corpus()
    return reps, time.perf_counter() - start


@pytest.fixture(scope="module")
def by_id(reports):
    return {rep.id: rep for rep in reports[0]}


# --- interval arithmetic -----------------------------------------------------


def test_interval_examples():
    I = Interval(Q(3), Q(4))
    assert eval_interval(sp.Rational(2, 5), I) == Interval(Q(2, 5))
    assert eval_interval(r_sym, I) == I
    assert eval_interval(C.morawetz_A_expr(), Interval(Q(3))) == Interval(0)


def test_interval_operations():
    a = Interval(-1, 2)
    assert a * a == Interval(-2, 4)
    assert a**2 == Interval(0, 4)
    assert abs(Interval(-3, 1)) == Interval(0, 3)
    assert Interval(1, 2) - Interval(1, 2) == Interval(-1, 1)
    assert 1 / Interval(2, 4) == Interval(Q(1, 4), Q(1, 2))
    with pytest.raises(ZeroDivisionError):
        Interval(-1, 1).reciprocal()
    root = Interval(2).sqrt()
    assert root.lo**2 <= 2 <= root.hi**2 and root.width < Q(1, 2**60)


@settings(max_examples=200, deadline=None)
@given(
    st.fractions(Q(2), Q(50), max_denominator=64),
    st.fractions(Q(0), Q(5), max_denominator=64),
    st.fractions(Q(0), Q(1), max_denominator=64),
)
def test_enclosure_contains_exact_values(lo, width, t):
    """Inclusion: every point value lies in the enclosure of a box around it."""
    box = Interval(lo, lo + width)
    x = lo + t * width
    for expr in (C.two_fifths_expr(), C.morawetz_q_expr(), C.morawetz_g_expr(), *C.bigdivp_triple()):
        val = C._to_q(expr.subs(r_sym, sp.Rational(x.numerator, x.denominator)))
        assert val in eval_interval(expr, box)


def test_enclosure_is_inclusion_monotone():
    e = C.two_fifths_expr()
    outer = eval_interval(e, Interval(Q(2), Q(6)))
    inner = eval_interval(e, Interval(Q(5, 2), Q(4)))
    assert inner in outer


def test_unsupported_node_rejected():
    with pytest.raises(TypeError):
        eval_interval(sp.sin(r_sym), Interval(3, 4))


# --- spot values ---------------------------------------------------------


def test_two_fifths_spot_values():
    e = C.two_fifths_expr()
    assert C._to_q(e.subs(r_sym, 2)) == Q(45, 128)
    assert C._to_q(e.subs(r_sym, 3)) == Q(7, 24)


def test_one_hundredth_value_at_horizon_and_double_root():
    item = {it.id: it for it in C.corpus()}["d.one-hundredth"]
    assert C.exact_value(item, 2) == 10 - Q(8, 25)
    assert C.exact_value(item, Q(15, 2)) == 0


def test_bigdivp_conditions_strict_at_ten():
    b = C.bigdivp_triple()
    for name, e in C.e1_conditions(*b).items():
        assert C._to_q(e.subs(r_sym, 10)) > 0, name


def test_bigdivp_triple_matches_numeric_coefficients():
    r = np.linspace(2.0, 50.0, 37)
    c, g, _ = bulk_coefficients(r)
    b = [sp.lambdify(r_sym, x)(r) for x in C.bigdivp_triple()]
    assert np.allclose(b, [c.b0, c.b1, c.b2], rtol=1e-13)
    assert np.allclose(sp.lambdify(r_sym, C.morawetz_g_expr())(r), g, rtol=1e-13)


def test_coefficient_audit_general_formula():
    """Extracting g from the general-(A, q) triple reproduces the displayed triple exactly."""
    f, q, g = C.morawetz_A_expr(), C.morawetz_q_expr(), C.morawetz_g_expr()
    for ours, ref in zip(C.general_triple(f, q, g), C.bigdivp_triple()):
        assert sp.simplify(ours - ref) == 0


# --- corpus --------------------------------------------------------------


def test_corpus_all_certified_within_budget(reports):
    reps, elapsed = reports
    failed = [(rep.id, rep.verdict, rep.note) for rep in reps if not rep.certified]
    assert failed == []
    assert elapsed <= 60.0
    assert len({rep.id for rep in reps}) == len(reps)
    assert [rep.id for rep in reps] == sorted(rep.id for rep in reps)


def test_corpus_covers_all_items(by_id):
    prefixes = {k.split(".")[0] for k in by_id}
    assert prefixes == set("abcdef")


def test_item_b_saturation_union(by_id):
    sat = set()
    for key, rep in by_id.items():
        if key.startswith("b."):
            sat.update(Q(s) for s in rep.saturation)
    assert sat == {Q(2), Q(3)}


def test_q_nonnegative_saturates_at_horizon(by_id):
    rep = by_id["b.q>=0"]
    assert rep.saturation == ["2"]
    assert rep.margin_lo == rep.margin_hi == 0


def test_saturation_points_are_exact_zeros(by_id):
    items = {it.id: it for it in C.corpus()}
    for key, rep in by_id.items():
        if key in items and not items[key].param:
            for s in rep.saturation:
                if s != "inf":
                    assert C.exact_value(items[key], Q(s)) == 0


def test_strict_items_have_positive_margin(by_id):
    for key in ("c.two-fifths", "f.future"):
        rep = by_id[key]
        assert rep.saturation == []
        assert 0 < rep.margin_lo <= rep.margin_hi
    # 2/5 - 45/128 is the gap at r = 2M, the smallest over the exterior
    assert by_id["c.two-fifths"].margin_hi <= Q(2, 5) - Q(45, 128)


def test_item_d_saturates_at_fifteen_halves(by_id):
    assert by_id["d.one-hundredth"].saturation == ["15/2"]


def test_false_statement_fails_with_witness():
    rep = C.certify(C.false_two_fifths())
    assert rep.verdict == "failed"
    assert rep.witness is not None
    lo, hi = (Q(x) for x in rep.witness[0].strip("[]").split(","))
    assert Q(2) <= lo < hi <= Q(3)
    # the witness value is a certified upper bound on the (negative) infimum
    assert rep.margin_hi < 0 and rep.margin_lo is None
    assert C.exact_value(C.false_two_fifths(), 2) == Q(1, 3) - Q(45, 128)


@pytest.mark.parametrize("key", ["e.timelike", "c.two-fifths"])
def test_small_depth_budget_is_inconclusive_not_certified(key):
    item = {it.id: it for it in C.corpus()}[key]
    rep = C.certify(item, depth=2)
    assert rep.verdict == "inconclusive-at-depth"
    assert rep.margin_lo is None and "depth 2" in rep.note


@pytest.mark.parametrize("item", C.corpus() + [C.FUTURE_POINTING], ids=lambda it: it.id)
def test_tail_transform_agrees_with_direct_evaluation(item):
    num, den = C.tail_form(item)
    u = C.u_sym
    radii = np.geomspace(1000, 1e6, 20)
    p = None if item.param is None else (item.param[1] + item.param[2]) / 3
    for rv in radii:
        rq = Q(int(round(rv)))
        direct = C.exact_value(item, rq, p)
        subs = {u: sp.Rational(1, rq.numerator)}
        if item.param:
            subs[item.param[0]] = sp.Rational(p.numerator, p.denominator)
        assert C._to_q(num.subs(subs)) / C._to_q(den.subs(subs)) == direct
        ubox = {u: Interval(Q(1, rq.numerator + 1), Q(1, rq.numerator - 1))}
        if item.param:
            ubox[item.param[0]] = Interval(p)
        enc = eval_interval(num, ubox) / eval_interval(den, ubox)
        assert direct in enc


def test_json_schema(reports, tmp_path):
    data = json.loads(C.reports_json(reports[0]))
    for entry in data:
        for key in ("id", "verdict", "margin-lo", "margin-hi", "subdivisions", "saturation", "wall_time"):
            assert key in entry
    text = reports[0][0].text()
    assert reports[0][0].id in text and "margin=" in text


def test_reports_are_deterministic(by_id):
    again = {rep.id: rep for rep in C.certify_corpus()}
    for key, rep in by_id.items():
        other = again[key]
        assert (rep.verdict, rep.margin_lo, rep.margin_hi, rep.saturation, rep.subdivisions) == (
            other.verdict, other.margin_lo, other.margin_hi, other.saturation, other.subdivisions)


def test_parallel_corpus_matches_serial(by_id):
    par = C.certify_corpus(workers=3)
    assert [(rep.id, rep.verdict, rep.margin_lo) for rep in par] == [
        (k, by_id[k].verdict, by_id[k].margin_lo) for k in sorted(by_id)]
