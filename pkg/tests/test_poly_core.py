import json

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from skewfatou import (
    FiberPoly,
    Poly1,
    SkewProduct,
    infinity_map,
    map_to_document,
    parse_map,
    roots,
    vertical_critical_w,
    vertical_preimages,
)
from skewfatou.errors import (
    DegreeMismatch,
    DegreeTooLow,
    MalformedSpec,
    NotMonic,
)
from skewfatou.poly_core import solve_fiber_equals, solve_p_equals


# ---------------------------------------------------------------------------
# Poly1 basics
# ---------------------------------------------------------------------------


def test_eval_matches_numpy_polyval():
    p = Poly1((1.5, -2j, 0, 3, 1))  # 1.5 - 2i z + 3 z^3 + z^4
    zs = np.array([0, 1, -2.5 + 1j, 3j, 0.1])
    mine = p.eval_many(zs)
    ref = np.polyval(list(p.coeffs)[::-1], zs)
    np.testing.assert_allclose(mine, ref, rtol=1e-12)


def test_derivative_and_compose():
    p = Poly1((-6, 0, 1))  # z^2 - 6
    assert p.derivative().coeffs == (0, 2)
    p2 = p.compose(p)
    # (z^2-6)^2 - 6 = z^4 - 12 z^2 + 30
    assert np.allclose(p2.coeffs, (30, 0, -12, 0, 1))
    assert p.iterate(2).coeffs == p2.coeffs


def test_iterate_degree_growth():
    p = Poly1((1j, 0, 0, 1))
    assert p.iterate(3).degree == 27


def test_leading_zero_rejected():
    with pytest.raises(ValueError):
        Poly1((1, 2, 0))


def test_roots_known():
    got = sorted(roots(Poly1((-1, 0, 1))), key=lambda z: z.real)
    assert abs(got[0] + 1) < 1e-10 and abs(got[1] - 1) < 1e-10


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False),
        min_size=1,
        max_size=6,
    )
)
def test_roots_round_trip_from_factored_form(rts):
    # keep the roots pairwise separated so the recovery tolerance is meaningful
    kept = []
    for r in rts:
        if all(abs(r - s) >= 1e-2 for s in kept):
            kept.append(r)
    coeffs = np.array([1.0 + 0j])
    for r in kept:
        coeffs = np.convolve(coeffs, [1.0, -r])
    p = Poly1(tuple(coeffs[::-1]))
    got = roots(p)
    assert len(got) == len(kept)
    for r in kept:
        assert min(abs(r - g) for g in got) < 1e-8


def test_solve_p_equals_inverts():
    p = Poly1((-6, 0, 1))
    targets = np.array([0, 1 + 1j, -5.5, 13.0])
    sols = solve_p_equals(p, targets)
    assert sols.shape == (4, 2)
    np.testing.assert_allclose(p.eval_many(sols), np.repeat(targets, 2).reshape(4, 2), atol=1e-8)


# ---------------------------------------------------------------------------
# FiberPoly / SkewProduct validation
# ---------------------------------------------------------------------------


def test_fiber_poly_requires_monic_top():
    with pytest.raises(NotMonic):
        FiberPoly(2, {(0, 2): 2.0})


def test_fiber_poly_rejects_total_degree_overflow():
    with pytest.raises(DegreeMismatch):
        FiberPoly(2, {(0, 2): 1, (2, 1): 1})  # z^2 w has total degree 3


def test_skew_product_validation():
    with pytest.raises(DegreeTooLow):
        SkewProduct(1, Poly1((0, 1)), FiberPoly(1, {(0, 1): 1}))
    with pytest.raises(DegreeMismatch):
        SkewProduct(2, Poly1((0, 0, 0, 1)), FiberPoly(2, {(0, 2): 1}))
    with pytest.raises(NotMonic):
        SkewProduct(2, Poly1((0, 0, 2)), FiberPoly(2, {(0, 2): 1}))


def test_vertical_critical_and_preimages(sp96):
    crit = vertical_critical_w(sp96, 1.0)
    assert len(crit) == 1 and abs(crit[0]) < 1e-10
    pre = vertical_preimages(sp96, -2.0, 5.0)  # q(-2, w) = w^2 + 5 = 5
    assert sorted(abs(w) for w in pre) == pytest.approx([0.0, 0.0], abs=1e-8)


# ---------------------------------------------------------------------------
# Induced map on the line at infinity (oracle: sympy total-degree filter)
# ---------------------------------------------------------------------------


def _sympy_infinity(sp):
    z, w, u = sympy.symbols("z w u")
    expr = sympy.S(0)
    for (j, k), c in sp.q.coeffs.items():
        expr += sympy.nsimplify(c, rational=False) * z**j * w**k
    poly = sympy.Poly(expr, z, w)
    top = sympy.S(0)
    for monom, coeff in poly.terms():
        if sum(monom) == sp.d:
            top += coeff * z ** monom[0] * w ** monom[1]
    return sympy.Poly(top.subs({z: 1, w: u}), u)


@pytest.mark.parametrize(
    "qdict,d",
    [
        ({(0, 2): 1, (1, 0): 0.5}, 2),       # a z term: total degree 1, drops out
        ({(0, 2): 1, (1, 1): 2.0}, 2),       # z w survives
        ({(0, 3): 1, (2, 1): -1j, (1, 1): 4}, 3),
    ],
)
def test_infinity_map_matches_sympy(qdict, d):
    sp = SkewProduct(d, Poly1((0,) * d + (1,)), FiberPoly(d, qdict))
    got = infinity_map(sp)
    ref = _sympy_infinity(sp)
    ref_coeffs = [complex(c) for c in ref.all_coeffs()[::-1]]
    ref_coeffs += [0j] * (d + 1 - len(ref_coeffs))
    assert np.allclose(got.coeffs, ref_coeffs, atol=1e-12)


def test_infinity_map_a_family_is_pure_power():
    # frozen oracle: for q = w^2 + a z the a z term has total degree 1 < 2,
    # so the induced map at infinity is exactly u^2
    from skewfatou.gallery import build_demarco_hruska

    sp = build_demarco_hruska(0.3 + 0.2j)
    assert infinity_map(sp).coeffs == (0, 0, 1)


# ---------------------------------------------------------------------------
# Map-spec documents
# ---------------------------------------------------------------------------


def test_document_round_trip(sp96):
    text = map_to_document(sp96)
    sp2 = parse_map(text)
    assert sp2.d == sp96.d
    assert sp2.p.coeffs == sp96.p.coeffs
    assert sp2.q.coeffs == sp96.q.coeffs


def test_parse_map_ignores_unknown_keys(sp96):
    doc = json.loads(map_to_document(sp96))
    doc["comment"] = "extra"
    parse_map(json.dumps(doc))


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(d=1),
        lambda d: d["p"].append([1, 0]),
        lambda d: d["p"].__setitem__(-1, [2, 0]),
        lambda d: d["q"].append(dict(d["q"][0])),
        lambda d: d.pop("p"),
    ],
)
def test_parse_map_rejects_malformed(sp96, mutate):
    doc = json.loads(map_to_document(sp96))
    mutate(doc)
    with pytest.raises((MalformedSpec, DegreeMismatch, DegreeTooLow, NotMonic)):
        parse_map(json.dumps(doc))


def test_parse_map_rejects_garbage_text():
    with pytest.raises(MalformedSpec):
        parse_map("not json at all {")


def test_solve_fiber_equals_inverts(sp96):
    zs = np.array([-2.0 + 0j, 1.0 + 0j])
    targets = np.array([5.0 + 0j, 2.0 + 0j])
    sols = solve_fiber_equals(sp96, zs, targets)
    for row, (z, t) in enumerate(zip(zs, targets)):
        for w in sols[row]:
            assert abs(sp96.q(z, w) - t) < 1e-8
