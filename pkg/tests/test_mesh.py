import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ensheat.mesh import (
    BoundaryPartition,
    DirichletBC,
    Mesh,
    MeshFormatError,
    MeshValidationError,
    NeumannBC,
    RobinBC,
    build_structured_mesh,
    export_mesh,
    import_mesh,
    mesh_size,
    triangle_areas,
)


class TestStructuredMesh:
    def test_smallest_case_counts(self):
        mesh = build_structured_mesh(1)
        assert mesh.num_vertices == 4
        assert mesh.num_triangles == 2
        assert len(mesh.boundary_labels) == 4

    def test_reference_resolution_counts(self):
        mesh = build_structured_mesh(64)
        assert mesh.num_vertices == 4225
        assert mesh.num_triangles == 8192

    def test_total_area_is_exact(self):
        mesh = build_structured_mesh(8)
        assert triangle_areas(mesh).sum() == pytest.approx(1.0, abs=1e-15)

    @given(st.integers(min_value=1, max_value=20))
    @settings(max_examples=12, deadline=None)
    def test_area_partition_property(self, m):
        mesh = build_structured_mesh(m)
        assert abs(triangle_areas(mesh).sum() - 1.0) < 1e-12

    def test_mesh_size(self):
        assert mesh_size(build_structured_mesh(4)) == pytest.approx(np.sqrt(2) / 4)
        assert mesh_size(build_structured_mesh(64)) == pytest.approx(np.sqrt(2) / 64)

    def test_single_triangle_mesh_size(self):
        tri = Mesh(
            vertices=[(0.0, 0.0), (1.0, 0.0), (0.5, np.sqrt(3) / 2)],
            triangles=[(0, 1, 2)],
            boundary_edges=[(0, 1), (1, 2), (2, 0)],
            boundary_labels=["a", "b", "c"],
        )
        assert mesh_size(tri) == pytest.approx(1.0)

    def test_deterministic_construction(self):
        a = build_structured_mesh(5)
        b = build_structured_mesh(5)
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.triangles, b.triangles)
        assert np.array_equal(a.boundary_edges, b.boundary_edges)
        assert a.boundary_labels == b.boundary_labels

    def test_labels(self):
        mesh = build_structured_mesh(3)
        assert mesh.labels == {"bottom", "right", "top", "left"}
        assert len(mesh.edges_with_labels(["top"])) == 3
        assert len(mesh.boundary_vertices(["left"])) == 4

    def test_invalid_m(self):
        with pytest.raises(ValueError):
            build_structured_mesh(0)

    def test_unknown_pattern(self):
        with pytest.raises(ValueError):
            build_structured_mesh(2, pattern="criss-cross")

    def test_immutable(self):
        mesh = build_structured_mesh(2)
        with pytest.raises(ValueError):
            mesh.vertices[0, 0] = 5.0


class TestImportExport:
    def test_round_trip_matches_builder(self):
        mesh = build_structured_mesh(1)
        parsed = import_mesh(export_mesh(mesh))
        assert np.array_equal(parsed.vertices, mesh.vertices)
        assert np.array_equal(parsed.triangles, mesh.triangles)
        assert parsed.boundary_labels == mesh.boundary_labels

    def test_export_import_export_is_identity(self):
        text = export_mesh(build_structured_mesh(3))
        assert export_mesh(import_mesh(text)) == text

    def test_clockwise_triangle_rejected(self):
        text = (
            "vertices 3\n0 0\n1 0\n0 1\n"
            "triangles 1\n0 2 1\n"
            "boundary_edges 3\n0 1 a\n1 2 a\n2 0 a\n"
        )
        with pytest.raises(MeshValidationError, match="negative area"):
            import_mesh(text)

    def test_dangling_vertex_index(self):
        text = (
            "vertices 3\n0 0\n1 0\n0 1\n"
            "triangles 1\n0 1 7\n"
            "boundary_edges 3\n0 1 a\n1 2 a\n2 0 a\n"
        )
        with pytest.raises(MeshValidationError, match="out of range"):
            import_mesh(text)

    def test_parse_error_carries_line_number(self):
        text = "vertices 2\n0 0\nnot numbers\n"
        with pytest.raises(MeshFormatError, match="line 3"):
            import_mesh(text)

    def test_missing_header(self):
        with pytest.raises(MeshFormatError, match="vertices"):
            import_mesh("points 3\n")

    def test_truncated_file(self):
        with pytest.raises(MeshFormatError, match="end of file"):
            import_mesh("vertices 3\n0 0\n")

    def test_wrong_boundary_set_rejected(self):
        # omits one rim edge
        text = (
            "vertices 3\n0 0\n1 0\n0 1\n"
            "triangles 1\n0 1 2\n"
            "boundary_edges 2\n0 1 a\n1 2 a\n"
        )
        with pytest.raises(MeshValidationError, match="rim"):
            import_mesh(text)


class TestBoundaryPartition:
    def test_mixed_partition_ok(self, square2):
        zero = lambda x, y, t: 0.0
        part = BoundaryPartition(
            {
                "bottom": DirichletBC(zero),
                "top": DirichletBC(zero),
                "left": NeumannBC(zero),
                "right": NeumannBC(zero),
            }
        )
        part.validate_against(square2)
        assert part.kind == "mixed"

    def test_robin_partition_ok(self, square2):
        zero = lambda x, y, t: 0.0
        part = BoundaryPartition(
            {lab: RobinBC(0.5, zero) for lab in ("bottom", "top", "left", "right")}
        )
        part.validate_against(square2)
        assert part.kind == "robin"
        assert part.robin_alpha == 0.5

    def test_mixing_robin_with_dirichlet_rejected(self):
        zero = lambda x, y, t: 0.0
        with pytest.raises(ValueError, match="Robin"):
            BoundaryPartition({"a": RobinBC(0.5, zero), "b": DirichletBC(zero)})

    def test_differing_alpha_rejected(self):
        zero = lambda x, y, t: 0.0
        with pytest.raises(ValueError, match="alpha"):
            BoundaryPartition({"a": RobinBC(0.5, zero), "b": RobinBC(0.25, zero)})

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            RobinBC(1.5, lambda x, y, t: 0.0)

    def test_missing_label_detected(self, square2):
        part = BoundaryPartition({"bottom": DirichletBC(lambda x, y, t: 0.0)})
        with pytest.raises(ValueError, match="left"):
            part.validate_against(square2)
