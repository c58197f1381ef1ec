import numpy as np
import pytest

from skewfatou import (
    Cycle,
    FiberPoly,
    Poly1,
    SkewProduct,
    attracting_cycles,
    fiber_return_map,
    make_evaluator,
    min_distance,
    postcritical_cloud,
    sample_J2,
    sample_J_base,
    sample_J_fiber,
    sample_J_infinity,
)
from skewfatou.errors import AmbientMismatch
from skewfatou.sets import PointCloud

from conftest import hausdorff


# ---------------------------------------------------------------------------
# Julia-set samplers
# ---------------------------------------------------------------------------


def test_sample_J_base_unit_circle(ev_squares):
    cloud = sample_J_base(ev_squares, 800, seed=1)
    assert cloud.ambient == "base-plane"
    assert cloud.count == 800
    assert np.max(np.abs(np.abs(cloud.points) - 1.0)) < 1e-6


def test_sample_J_base_cantor_96(ev96):
    cloud = sample_J_base(ev96, 800, seed=1)
    pts = cloud.points
    assert np.max(np.abs(pts.imag)) < 1e-8  # real Cantor set
    assert np.all(np.abs(pts.real) <= 3.0 + 1e-9)
    assert np.all(np.abs(pts.real) >= np.sqrt(3.0) - 1e-6)
    assert ev96.green_base_grid(pts).max() < 1e-5


def test_sample_J_base_basilica_on_julia():
    sp = SkewProduct(2, Poly1((-1, 0, 1)), FiberPoly(2, {(0, 2): 1}))
    ev = make_evaluator(sp)
    cloud = sample_J_base(ev, 600, seed=2)
    assert ev.green_base_grid(cloud.points).max() < 1e-5


@pytest.mark.parametrize("name_seed", [(0, 1), (5, 9)])
def test_sample_J_base_two_run_hausdorff(ev_squares, ev96, name_seed):
    s1, s2 = name_seed
    for ev in (ev_squares, ev96):
        a = sample_J_base(ev, 2000, seed=s1).points
        b = sample_J_base(ev, 2000, seed=s2).points
        assert hausdorff(a, b) <= 5e-2


def test_sample_J_fiber_96(ev96):
    # z = -2 is fixed under z^2 - 6; its fiber map is w^2 + 5
    cloud = sample_J_fiber(ev96, -2.0, 400, seed=3)
    assert cloud.ambient == "fiber-plane"
    assert ev96.green_fiber_grid(-2.0, cloud.points).max() < 1e-5


def test_sample_J_fiber_rejects_escaping_base(ev96):
    with pytest.raises(ValueError):
        sample_J_fiber(ev96, 100.0, 16)


def test_sample_J2(ev96):
    cloud = sample_J2(ev96, 64, 8, seed=4)
    assert cloud.ambient == "product-space"
    assert cloud.points.shape == (512, 2)
    assert ev96.green_base_grid(cloud.points[:, 0]).max() < 1e-5
    for z, w in cloud.points[:32]:
        assert ev96.green_fiber(z, w) < 1e-4


def test_sample_J_infinity_circle(ev_squares, ev96):
    for ev in (ev_squares, ev96):
        cloud = sample_J_infinity(ev, 300, seed=5)
        assert cloud.ambient == "infinity-line"
        # both induced infinity maps are u^2: J is the unit circle
        assert np.max(np.abs(np.abs(cloud.points) - 1.0)) < 1e-6


def test_sampler_determinism(ev96):
    a = sample_J_base(ev96, 256, seed=11).points
    b = sample_J_base(ev96, 256, seed=11).points
    np.testing.assert_array_equal(a, b)


# ---------------------------------------------------------------------------
# CSV round-trip
# ---------------------------------------------------------------------------


def test_csv_round_trip(ev96):
    cloud = sample_J2(ev96, 16, 4, seed=6)
    text = cloud.to_csv()
    assert text.startswith("#")
    back = PointCloud.from_csv(text, ambient=cloud.ambient)
    assert back.ambient == cloud.ambient
    np.testing.assert_allclose(back.points, cloud.points, atol=1e-12)


# ---------------------------------------------------------------------------
# Attracting cycles and return maps
# ---------------------------------------------------------------------------


def test_attracting_cycles_basilica():
    cycles = attracting_cycles(Poly1((-1, 0, 1)))
    assert len(cycles) == 1
    c = cycles[0]
    assert c.period == 2
    assert abs(c.multiplier) < 1e-8
    got = sorted(c.points, key=lambda z: z.real)
    assert abs(got[0] + 1) < 1e-8 and abs(got[1]) < 1e-8


def test_attracting_cycles_none_for_cantor():
    assert attracting_cycles(Poly1((-6, 0, 1))) == []


def test_attracting_cycles_superattracting_fixed():
    cycles = attracting_cycles(Poly1((0, 0, 1)))
    assert len(cycles) == 1
    assert cycles[0].period == 1
    assert abs(cycles[0].points[0]) < 1e-10


def test_cycle_validation():
    with pytest.raises(ValueError):
        Cycle(points=(0j,), period=2, multiplier=0j)
    with pytest.raises(ValueError):
        Cycle(points=(0j,), period=1, multiplier=2.0 + 0j)


def test_fiber_return_map_a_family():
    from skewfatou.gallery import build_demarco_hruska

    sp = build_demarco_hruska(0.37)
    cyc = Cycle(points=(1 + 0j,), period=1, multiplier=0j)
    rm = fiber_return_map(sp, cyc)
    assert np.allclose(rm.coeffs, (0.37, 0, 1))  # w^2 + a at the fixed fiber


def test_fiber_return_map_rejects_non_cycle(sp96):
    cyc = Cycle(points=(0.001 + 0j, 0.002 + 0j), period=2, multiplier=0j)
    with pytest.raises(ValueError):
        fiber_return_map(sp96, cyc)


# ---------------------------------------------------------------------------
# Postcritical clouds and distances
# ---------------------------------------------------------------------------


def test_postcritical_D_p_escaping(ev96):
    cloud = postcritical_cloud(ev96, "D_p")
    assert cloud.ambient == "base-plane"
    assert cloud.escaping is not None and cloud.escaping.all()


def test_postcritical_D_Jp_dendrite_on_julia():
    from skewfatou.gallery import build

    ev = make_evaluator(build("product_dendrite"))
    cloud = postcritical_cloud(ev, "D_Jp", n_starts=64, seed=1)
    assert cloud.count > 0
    assert not cloud.escaping.any()
    # the fiber map is w^2 + i with preperiodic critical orbit {i, -1+i, -i}
    landing = np.array([1j, -1 + 1j, -1j])
    w = cloud.points[:, 1]
    dist = np.min(np.abs(w[:, None] - landing[None, :]), axis=1)
    assert dist.max() < 1e-6
    # base coordinates stay pinned to J_p
    assert ev.green_base_grid(cloud.points[:, 0]).max() < 1e-4


def test_postcritical_D_Ap_empty_for_cantor_base(ev96):
    cloud = postcritical_cloud(ev96, "D_Ap")
    assert cloud.count == 0


def test_min_distance_basic(ev96, ev_squares):
    a = sample_J_base(ev_squares, 200, seed=1)
    b = sample_J_base(ev96, 200, seed=1)
    d = min_distance(a, b)
    # unit circle vs Cantor set in [-3,-sqrt3]+[sqrt3,3]
    assert abs(d - (np.sqrt(3) - 1)) < 0.05


def test_min_distance_ambient_mismatch(ev96):
    a = sample_J_base(ev96, 16, seed=1)
    b = sample_J2(ev96, 4, 4, seed=1)
    with pytest.raises(AmbientMismatch):
        min_distance(a, b)


def test_min_distance_empty_is_inf(ev96):
    a = sample_J_base(ev96, 16, seed=1)
    empty = PointCloud(ambient="base-plane", points=np.zeros(0, dtype=complex), meta={})
    assert min_distance(a, empty) == float("inf")
