import numpy as np
import pytest

from skewfatou import gallery, make_evaluator


@pytest.fixture(scope="session")
def sp96():
    """(z^2 - 6, w^2 + 3 - z): disconnected, hyperbolic-looking."""
    return gallery.build("jonsson_9_6")


@pytest.fixture(scope="session")
def sp97():
    """(z^2 - 2, w^2 + 2(2 - z)): connected J_2 but disconnected fibers."""
    return gallery.build("jonsson_9_7")


@pytest.fixture(scope="session")
def sp_dendrite():
    """(z^2 - 6, w^2 + i): disconnected base, connected dendrite fibers."""
    return gallery.build("product_dendrite")


@pytest.fixture(scope="session")
def sp_squares():
    """(z^2, w^2): trivially connected product."""
    return gallery.build("product_squares")


@pytest.fixture(scope="session")
def ev96(sp96):
    return make_evaluator(sp96)


@pytest.fixture(scope="session")
def ev_squares(sp_squares):
    return make_evaluator(sp_squares)


def mandelbrot_oracle(a: complex, n_iter: int = 100_000) -> bool:
    """Ground truth for the a-family: critical orbit of w^2 + a bounded."""
    w = 0j
    for _ in range(n_iter):
        w = w * w + a
        if abs(w) > 2:
            return False
    return True


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two complex point clouds."""
    from scipy.spatial import cKDTree

    ra = np.column_stack([a.real, a.imag])
    rb = np.column_stack([b.real, b.imag])
    d_ab = cKDTree(rb).query(ra)[0].max()
    d_ba = cKDTree(ra).query(rb)[0].max()
    return float(max(d_ab, d_ba))
