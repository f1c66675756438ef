import numpy as np
import pytest
from scipy.integrate import dblquad

from ensheat.assembly import (
    apply_dirichlet,
    assemble_boundary_load,
    assemble_boundary_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    error_norms,
    interpolate,
    l2_norm,
)
from ensheat.conductivity import ConductivityModel
from ensheat.mesh import Mesh, build_structured_mesh


class TestMassMatrix:
    def test_single_triangle_local_matrix(self, unit_right_triangle):
        M = assemble_mass(unit_right_triangle).toarray()
        area = 0.5
        expected = area / 12.0 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
        assert np.allclose(M, expected, atol=1e-14, rtol=0)

    def test_entries_sum_to_domain_area(self, square4):
        M = assemble_mass(square4)
        assert M.data.sum() == pytest.approx(1.0, abs=1e-13)

    def test_symmetric_positive_diagonal(self, square2):
        M = assemble_mass(square2)
        dense = M.toarray()
        assert np.array_equal(dense, dense.T)
        assert np.all(M.diagonal() > 0)

    def test_spd_random_vectors(self, square4, rng):
        M = assemble_mass(square4)
        for _ in range(100):
            x = rng.standard_normal(square4.num_vertices)
            assert x @ M.matvec(x) > 0.0


class TestStiffness:
    def test_unit_right_triangle_local_matrix(self, unit_right_triangle):
        K = assemble_stiffness(unit_right_triangle, mode="identity").toarray()
        expected = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
        assert np.allclose(K, expected, atol=1e-14, rtol=0)

    def test_annihilates_constants(self, square4):
        K = assemble_stiffness(square4, mode="identity")
        ones = np.ones(square4.num_vertices)
        assert np.abs(K.matvec(ones)).max() < 1e-12 * np.abs(K.data).max()

    @pytest.mark.parametrize("mode", ["kappa_of", "kappa_prime_of"])
    def test_coefficient_modes_annihilate_constants(self, square4, mode, rng):
        model = ConductivityModel.exponential(-0.1, 0.5, 2.0)
        field = rng.uniform(-1.0, 1.0, square4.num_vertices)
        K = assemble_stiffness(square4, coeff=field, model=model, mode=mode)
        assert np.abs(K.matvec(np.ones(square4.num_vertices))).max() < 1e-12

    def test_kappa_prime_of_constant_kappa_max_is_zero(self, square4):
        model = ConductivityModel.constant(2.0)
        K = assemble_stiffness(square4, coeff=0.0, model=model, mode="kappa_prime_of")
        assert np.abs(K.data).max() == 0.0

    def test_mode_requires_model(self, square4):
        with pytest.raises(ValueError, match="model"):
            assemble_stiffness(square4, coeff=1.0, mode="kappa_of")

    def test_exact_symmetry(self, square4, rng):
        model = ConductivityModel.exponential(-0.3, 0.1, 3.0)
        field = rng.uniform(-2.0, 2.0, square4.num_vertices)
        K = assemble_stiffness(square4, coeff=field, model=model, mode="kappa_of")
        dense = K.toarray()
        assert np.array_equal(dense, dense.T)

    def test_quadrature_exact_for_quadratic_coefficient(self, unit_right_triangle):
        # linear nodal field + linear kappa gives a polynomial coefficient the
        # 3-point rule integrates exactly; compare with adaptive quadrature
        model = ConductivityModel.linear(1.0, 1e-6, 100.0)
        field = interpolate(unit_right_triangle, lambda x, y, t: 1.0 + 2 * x + y, 0.0)
        K = assemble_stiffness(
            unit_right_triangle, coeff=field, model=model, mode="kappa_of"
        ).toarray()
        grads = {0: (-1.0, -1.0), 1: (1.0, 0.0), 2: (0.0, 1.0)}
        for i in range(3):
            for j in range(3):
                gi, gj = grads[i], grads[j]
                dot = gi[0] * gj[0] + gi[1] * gj[1]
                exact, _ = dblquad(
                    lambda y, x: (1.0 + 2 * x + y) * dot,
                    0.0,
                    1.0,
                    0.0,
                    lambda x: 1.0 - x,
                    epsabs=1e-13,
                )
                assert K[i, j] == pytest.approx(exact, abs=1e-12)


class TestBoundaryTerms:
    def test_zero_alpha_gives_zero_matrix(self, square2):
        R = assemble_boundary_mass(square2, ["left"], alpha=0.0)
        assert np.abs(R.data).max() == 0.0

    def test_single_edge_local_block(self, unit_right_triangle):
        R = assemble_boundary_mass(unit_right_triangle, ["bottom"], alpha=1.0).toarray()
        expected = np.zeros((3, 3))
        expected[:2, :2] = 1.0 / 6.0 * np.array([[2, 1], [1, 2]])
        assert np.allclose(R, expected, atol=1e-14, rtol=0)

    def test_perimeter_partition_of_unity(self, square4):
        R = assemble_boundary_mass(square4, sorted(square4.labels), alpha=1.0)
        assert R.data.sum() == pytest.approx(4.0, abs=1e-12)

    def test_unknown_label(self, square2):
        with pytest.raises(ValueError, match="unknown"):
            assemble_boundary_mass(square2, ["lid"], alpha=1.0)

    def test_boundary_load_constant_total(self, square4):
        one = lambda x, y, t: np.ones_like(x)
        b = assemble_boundary_load(square4, sorted(square4.labels), one, 0.0)
        assert b.sum() == pytest.approx(4.0, abs=1e-12)
        b_top = assemble_boundary_load(square4, ["top"], one, 0.0)
        assert b_top.sum() == pytest.approx(1.0, abs=1e-13)

    def test_boundary_load_zero(self, square4):
        zero = lambda x, y, t: np.zeros_like(x)
        b = assemble_boundary_load(square4, ["left"], zero, 0.0)
        assert np.abs(b).max() == 0.0


class TestLoadVector:
    def test_constant_source_total(self, square4):
        b = assemble_load(square4, lambda x, y, t: np.ones_like(x), 0.0)
        assert b.sum() == pytest.approx(1.0, abs=1e-13)

    def test_zero_source(self, square4):
        b = assemble_load(square4, lambda x, y, t: np.zeros_like(x), 0.0)
        assert np.abs(b).max() == 0.0

    def test_gaussian_pulse_total_matches_quadrature(self):
        mesh = build_structured_mesh(64)

        def pulse(x, y, t):
            return 4000.0 * np.exp(-8.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2))

        b = assemble_load(mesh, pulse, 0.0004)
        exact, _ = dblquad(
            lambda y, x: 4000.0 * np.exp(-8.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)),
            0.0,
            1.0,
            0.0,
            1.0,
            epsabs=1e-10,
        )
        assert b.sum() == pytest.approx(exact, rel=1e-4)


class TestDirichlet:
    def test_no_constraints_is_identity(self, square2, rng):
        A = assemble_mass(square2)
        b = rng.standard_normal(square2.num_vertices)
        A2, b2 = apply_dirichlet(A, b, [])
        assert np.array_equal(A2.toarray(), A.toarray())
        assert np.array_equal(b2, b)

    def test_all_nodes_constrained(self, square2):
        from ensheat.solver import factorize, solve_block

        A = assemble_stiffness(square2, mode="identity")
        A = A.__class__.combine([(1.0, assemble_mass(square2)), (1.0, A)])
        g = 2.5
        nodes = [(i, g) for i in range(square2.num_vertices)]
        A2, b2 = apply_dirichlet(A, np.zeros(square2.num_vertices), nodes)
        x = solve_block(factorize(A2), [b2])[0]
        assert np.allclose(x, g, atol=1e-12)

    def test_three_node_chain_matches_hand_elimination(self):
        # 1D-style chain: A = [[2,-1,0],[-1,2,-1],[0,-1,2]], ends fixed
        import scipy.sparse as sp

        from ensheat.assembly import SparseSymMatrix

        A = SparseSymMatrix.from_scipy(
            sp.csr_matrix(np.array([[2.0, -1, 0], [-1, 2, -1], [0, -1, 2]]))
        )
        b = np.array([0.0, 5.0, 0.0])
        A2, b2 = apply_dirichlet(A, b, [(0, 1.0), (2, 3.0)])
        # interior row: 2*x1 = 5 + 1*1 + 1*3 -> x1 = 4.5
        x = np.linalg.solve(A2.toarray(), b2)
        assert x == pytest.approx([1.0, 4.5, 3.0])

    def test_conflicting_values_rejected(self, square2):
        A = assemble_mass(square2)
        with pytest.raises(ValueError, match="conflicting"):
            apply_dirichlet(A, np.zeros(square2.num_vertices), [(0, 1.0), (0, 2.0)])

    def test_matrix_stays_symmetric(self, square4, rng):
        A = assemble_stiffness(square4, mode="identity")
        A = A.__class__.combine([(1.0, assemble_mass(square4)), (1.0, A)])
        nodes = [(int(i), 1.5) for i in square4.boundary_vertices(["top"])]
        A2, _ = apply_dirichlet(A, np.zeros(square4.num_vertices), nodes)
        dense = A2.toarray()
        assert np.array_equal(dense, dense.T)


class TestInterpolateAndNorms:
    def test_constant(self, square4):
        field = interpolate(square4, lambda x, y, t: 5.0, 0.0)
        assert np.all(field == 5.0)

    def test_linear_reproduction(self, square4):
        field = interpolate(square4, lambda x, y, t: x, 0.0)
        assert np.allclose(field, square4.vertices[:, 0], atol=0)

    def test_manufactured_point_value(self, square2):
        from ensheat.manufactured import exact_temperature

        field = interpolate(square2, exact_temperature, 0.0)
        center = np.flatnonzero(
            (square2.vertices[:, 0] == 0.5) & (square2.vertices[:, 1] == 0.5)
        )[0]
        assert field[center] == pytest.approx(0.2057446, abs=1e-6)

    def test_error_norms_zero_for_interpolated_linear(self, square4):
        u = lambda x, y, t: 2.0 * x - y + 0.25
        grad = lambda x, y, t: (np.full_like(x, 2.0), np.full_like(x, -1.0))
        field = interpolate(square4, u, 0.0)
        l2, h1 = error_norms(square4, field, u, grad, 0.0)
        assert l2 < 1e-12 and h1 < 1e-12

    def test_error_norms_against_constant(self, square4):
        zero_field = np.zeros(square4.num_vertices)
        one = lambda x, y, t: np.ones_like(x)
        zero_grad = lambda x, y, t: (np.zeros_like(x), np.zeros_like(x))
        l2, h1 = error_norms(square4, zero_field, one, zero_grad, 0.0)
        assert l2 == pytest.approx(1.0, abs=1e-12)
        assert h1 == pytest.approx(0.0, abs=1e-12)

    def test_error_norms_against_linear(self, square4):
        zero_field = np.zeros(square4.num_vertices)
        u = lambda x, y, t: x
        grad = lambda x, y, t: (np.ones_like(x), np.zeros_like(x))
        _, h1 = error_norms(square4, zero_field, u, grad, 0.0)
        assert h1 == pytest.approx(1.0, abs=1e-12)

    def test_l2_norm_of_constant(self, square4):
        M = assemble_mass(square4)
        assert l2_norm(M, np.full(square4.num_vertices, 3.0)) == pytest.approx(3.0)
