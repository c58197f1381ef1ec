import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewfatou import (
    FiberPoly,
    Poly1,
    Region,
    SkewProduct,
    harmonic_measure,
    homology_certificate,
    linking_case2,
    witness_cycles,
)
from skewfatou.errors import (
    BoundaryTooClose,
    HypothesisUnmet,
    InsufficientDepth,
    PieceNotSeparable,
)


def _rect(x0, x1, y0, y1):
    return Region.polygon(
        [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]
    )


@pytest.fixture(scope="module")
def sp_w2():
    """(z^2 - 6, w^2): Cantor base, connected fibers (Case 2)."""
    return SkewProduct(2, Poly1((-6, 0, 1)), FiberPoly(2, {(0, 2): 1}))


def full_tree_measure(region, depth=16):
    """Independent oracle: exact fraction of the full 2^depth preimage tree
    of z* = 13 under z^2 - 6 landing in the region (square-root branches,
    no polynomial solver)."""
    pts = np.array([13.0 + 0j])
    for _ in range(depth):
        r = np.sqrt(pts + 6.0)
        pts = np.concatenate([r, -r])
    inside = region.contains(pts)
    return inside.mean()


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


def test_region_polygon_contains():
    reg = _rect(0, 1, 0, 1)
    assert reg.contains(np.array([0.5 + 0.5j]))[0]
    assert not reg.contains(np.array([1.5 + 0.5j]))[0]


def test_region_disk_union_contains():
    reg = Region.disk_union([0j, 2.0 + 0j], [0.5, 0.5])
    got = reg.contains(np.array([0.1 + 0j, 2.2 + 0j, 1.0 + 0j]))
    assert list(got) == [True, True, False]


def test_region_boundary_nodes_close_up():
    reg = _rect(0, 1, 0, 1)
    for pts, normals, ds in reg.boundary_nodes(0.05):
        assert pts.shape == normals.shape
        assert np.allclose(np.abs(normals), 1.0)
        assert ds > 0


# ---------------------------------------------------------------------------
# Harmonic measure
# ---------------------------------------------------------------------------


def test_quarter_arc_measure(sp_squares):
    th = np.linspace(0, math.pi / 2, 64)
    outer = [1.5 * np.exp(1j * t) for t in th]
    inner = [0.5 * np.exp(1j * t) for t in th[::-1]]
    reg = Region.polygon(list(outer) + list(inner))
    est = harmonic_measure(sp_squares, reg, n=4096, seed=1)
    assert abs(est.value - 0.25) <= 0.01
    assert est.cross_check_delta <= 0.01
    assert est.method == "preimage-count"
    assert est.stderr == pytest.approx(
        math.sqrt(est.value * (1 - est.value) / est.n_samples)
    )


def _arc_region(t0, t1):
    th = np.linspace(t0, t1, 64)
    outer = [1.5 * np.exp(1j * t) for t in th]
    inner = [0.5 * np.exp(1j * t) for t in th[::-1]]
    return Region.polygon(list(outer) + list(inner))


def test_half_circle_measure(sp_squares):
    reg = _arc_region(-math.pi / 2, math.pi / 2)
    est = harmonic_measure(sp_squares, reg, n=8192, seed=3)
    assert abs(est.value - 0.5) <= 3 * est.stderr + 1e-9


def test_right_piece_vs_full_tree_oracle(sp_w2):
    reg = _rect(0.2, 3.4, -0.4, 0.4)
    oracle = full_tree_measure(reg, depth=16)
    est = harmonic_measure(sp_w2, reg, n=8192, seed=2)
    assert abs(oracle - 0.5) < 0.01  # sanity on the oracle itself
    assert abs(est.value - oracle) <= 3 * est.stderr + 1e-3


def test_total_mass_exact(sp_w2):
    est = harmonic_measure(sp_w2, _rect(-3.5, 3.5, -0.5, 0.5), n=4096, seed=2)
    assert est.value == 1.0


def test_additivity(sp_w2):
    right = _rect(0.2, 3.4, -0.4, 0.4)
    left = _rect(-3.4, -0.2, -0.4, 0.4)
    both = _rect(-3.4, 3.4, -0.4, 0.4)
    # the three rectangles cover/partition the Cantor set identically
    er = harmonic_measure(sp_w2, right, n=8192, seed=2)
    el = harmonic_measure(sp_w2, left, n=8192, seed=2)
    eb = harmonic_measure(sp_w2, both, n=8192, seed=2)
    assert abs(er.value + el.value - eb.value) <= 3 * math.sqrt(
        er.stderr**2 + el.stderr**2 + eb.stderr**2
    ) + 1e-9


def test_balancedness(sp_w2):
    # E = right Cantor piece; p^{-1}(E) = two bands |z| in [~2.78, 3]
    e = _rect(0.2, 3.4, -0.4, 0.4)
    pre1 = _rect(2.55, 3.3, -0.35, 0.35)
    pre2 = _rect(-3.3, -2.55, -0.35, 0.35)
    me = harmonic_measure(sp_w2, e, n=8192, seed=2)
    m1 = harmonic_measure(sp_w2, pre1, n=8192, seed=2)
    m2 = harmonic_measure(sp_w2, pre2, n=8192, seed=2)
    tol = 3 * math.sqrt(me.stderr**2 + m1.stderr**2 + m2.stderr**2)
    assert abs((m1.value + m2.value) - me.value) <= tol + 1e-9


def test_boundary_too_close_raises(sp_w2):
    # boundary passing straight through a Julia piece
    reg = _rect(2.0, 2.8, -0.4, 0.4)
    with pytest.raises(BoundaryTooClose):
        harmonic_measure(sp_w2, reg, n=2048, seed=2)


def test_measure_determinism(sp_squares):
    reg = _arc_region(0.1, 1.3)
    a = harmonic_measure(sp_squares, reg, n=2048, seed=9)
    b = harmonic_measure(sp_squares, reg, n=2048, seed=9)
    assert a == b


# ---------------------------------------------------------------------------
# Linking numbers and witness cycles
# ---------------------------------------------------------------------------


def test_linking_case2_right_piece(sp_w2):
    reg = _rect(0.2, 3.4, -0.4, 0.4)
    lr = linking_case2(sp_w2, reg, n=16384, seed=2, fiber_connected=True)
    assert lr.degree_factor == 1  # d - 1
    assert abs(lr.lk - 0.5) < 0.01
    assert lr.certified_nonzero


def test_linking_requires_connected_fibers(sp_w2):
    reg = _rect(0.2, 3.4, -0.4, 0.4)
    with pytest.raises(HypothesisUnmet):
        linking_case2(sp_w2, reg, fiber_connected=False)


def test_witness_cycles_sequence(sp_w2):
    results = witness_cycles(sp_w2, max_depth=6, n=65536, seed=0)
    assert len(results) == 6
    for k, (region, lr) in enumerate(results, start=1):
        assert abs(lr.lk - 0.5**k) <= 0.01
        assert lr.certified_nonzero
        assert region.meta.get("depth") == k
    raws = [lr.raw_pairing for _, lr in results]
    assert all(a > b for a, b in zip(raws, raws[1:]))


def test_homology_certificate_issued(sp_w2):
    results = witness_cycles(sp_w2, max_depth=6, n=65536, seed=0)
    cert = homology_certificate(sp_w2, results)
    assert cert["certified"] is True
    assert cert["depth"] == 6 and len(cert["entries"]) == 6
    assert "not a proof" in cert["statement"]


def test_homology_certificate_insufficient_depth(sp_w2):
    results = witness_cycles(sp_w2, max_depth=2, n=16384, seed=0)
    with pytest.raises(InsufficientDepth):
        homology_certificate(sp_w2, results)


def test_witness_cycles_reject_connected_base(sp_squares):
    with pytest.raises(HypothesisUnmet):
        witness_cycles(sp_squares, max_depth=3, n=4096)


def test_witness_cycles_reject_disconnected_fibers(sp96):
    # 9.6 has escaping vertical critical orbits: Case 2 hypotheses unmet
    with pytest.raises(HypothesisUnmet):
        witness_cycles(sp96, max_depth=3, n=4096)


def test_piece_not_separable_on_connected_julia(ev_squares):
    from skewfatou.current_link import _enclose_piece
    from skewfatou.sets import sample_J_base

    cloud = sample_J_base(ev_squares, 4096, seed=0).points
    piece = cloud[: len(cloud) // 2]
    with pytest.raises(PieceNotSeparable):
        _enclose_piece(piece, cloud, 1)


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


@settings(max_examples=8, deadline=None)
@given(st.sampled_from([(0.2, 3.4), (-3.4, -0.2), (2.55, 3.3), (1.7, 2.7)]))
def test_linking_is_mod1_of_scaled_measure(sp_w2, band):
    x0, x1 = band
    reg = _rect(x0, x1, -0.4, 0.4)
    try:
        lr = linking_case2(sp_w2, reg, n=4096, seed=5, fiber_connected=True)
    except BoundaryTooClose:
        return
    assert 0.0 <= lr.lk < 1.0
    assert lr.lk == pytest.approx(
        (lr.degree_factor * lr.estimate.value) % 1.0
    )
