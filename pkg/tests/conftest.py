import numpy as np
import pytest

from ensheat.mesh import Mesh, build_structured_mesh


@pytest.fixture
def unit_right_triangle():
    """Single CCW triangle (0,0), (1,0), (0,1); all edges on the boundary."""
    return Mesh(
        vertices=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)],
        triangles=[(0, 1, 2)],
        boundary_edges=[(0, 1), (1, 2), (2, 0)],
        boundary_labels=["bottom", "hyp", "left"],
    )


@pytest.fixture
def square2():
    return build_structured_mesh(2)


@pytest.fixture
def square4():
    return build_structured_mesh(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
