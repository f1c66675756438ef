"""Independent dense reimplementation of one scheme step, for cross-checks.

Everything here is assembled with explicit loops and numpy dense algebra;
nothing is shared with the package's sparse/pattern/scatter machinery except
the scenario description itself and the quadrature rule definitions, which
are part of the discrete scheme being checked.
"""

import numpy as np

from ensheat.mesh import DirichletBC, NeumannBC, RobinBC

EDGE_S = np.array([0.5 - np.sqrt(0.15), 0.5, 0.5 + np.sqrt(0.15)])
EDGE_W = np.array([5.0, 8.0, 5.0]) / 18.0
MID_LAMBDA = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


def tri_geometry(pts):
    area = 0.5 * (
        (pts[1, 0] - pts[0, 0]) * (pts[2, 1] - pts[0, 1])
        - (pts[1, 1] - pts[0, 1]) * (pts[2, 0] - pts[0, 0])
    )
    b = np.array(
        [pts[1, 1] - pts[2, 1], pts[2, 1] - pts[0, 1], pts[0, 1] - pts[1, 1]]
    ) / (2 * area)
    c = np.array(
        [pts[2, 0] - pts[1, 0], pts[0, 0] - pts[2, 0], pts[1, 0] - pts[0, 0]]
    ) / (2 * area)
    return area, b, c


def dense_matrices(mesh):
    n = mesh.num_vertices
    M = np.zeros((n, n))
    D = np.zeros((n, n))
    for tri in mesh.triangles:
        pts = mesh.vertices[tri]
        area, b, c = tri_geometry(pts)
        mloc = area / 12.0 * (np.ones((3, 3)) + np.eye(3))
        kloc = area * (np.outer(b, b) + np.outer(c, c))
        for i in range(3):
            for j in range(3):
                M[tri[i], tri[j]] += mloc[i, j]
                D[tri[i], tri[j]] += kloc[i, j]
    return M, D


def dense_fluctuation(mesh, model, T):
    n = mesh.num_vertices
    N = np.zeros((n, n))
    for tri in mesh.triangles:
        pts = mesh.vertices[tri]
        area, b, c = tri_geometry(pts)
        temps = MID_LAMBDA @ T[tri]
        kappa = np.clip(model.raw(temps), model.kappa_min, model.kappa_max)
        ck = model.kappa_max - kappa.mean()
        kloc = ck * area * (np.outer(b, b) + np.outer(c, c))
        for i in range(3):
            for j in range(3):
                N[tri[i], tri[j]] += kloc[i, j]
    return N


def dense_load(mesh, fn, t):
    b = np.zeros(mesh.num_vertices)
    for tri in mesh.triangles:
        pts = mesh.vertices[tri]
        area, _, _ = tri_geometry(pts)
        for q in range(3):
            xq = MID_LAMBDA[q] @ pts[:, 0]
            yq = MID_LAMBDA[q] @ pts[:, 1]
            fq = float(fn(xq, yq, t))
            for i in range(3):
                b[tri[i]] += area / 3.0 * fq * MID_LAMBDA[q, i]
    return b


def dense_boundary_load(mesh, labels, fn, t):
    b = np.zeros(mesh.num_vertices)
    for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
        if lab not in labels:
            continue
        p0, p1 = mesh.vertices[i], mesh.vertices[j]
        length = np.hypot(*(p1 - p0))
        for s, w in zip(EDGE_S, EDGE_W):
            x, y = p0 + s * (p1 - p0)
            g = float(fn(x, y, t))
            b[i] += length * w * g * (1.0 - s)
            b[j] += length * w * g * s
    return b


def dense_boundary_mass(mesh, alpha):
    n = mesh.num_vertices
    R = np.zeros((n, n))
    for (i, j), _ in zip(mesh.boundary_edges, mesh.boundary_labels):
        p0, p1 = mesh.vertices[i], mesh.vertices[j]
        length = np.hypot(*(p1 - p0))
        block = alpha * length / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        for a, na in enumerate((i, j)):
            for bb, nb in enumerate((i, j)):
                R[na, nb] += block[a, bb]
    return R


def dense_step(scenario, state):
    """One step of the scheme for every member, solved densely."""
    mesh, model, part = scenario.mesh, scenario.model, scenario.partition
    dt = scenario.dt
    t1 = (state.time_index + 1) * dt
    M, D = dense_matrices(mesh)
    A = M / dt + model.kappa_max * D

    dirichlet = {}
    if part.kind == "robin":
        A = A + dense_boundary_mass(mesh, part.robin_alpha)
    else:
        for lab, cond in part.conditions.items():
            if isinstance(cond, DirichletBC):
                for node in mesh.boundary_vertices([lab]):
                    dirichlet.setdefault(int(node), lab)

    results = []
    for j, member in enumerate(scenario.members):
        T = state.members[j]
        N = dense_fluctuation(mesh, model, T)
        b = M @ T / dt + N @ T + dense_load(mesh, scenario.member_source(j), t1)
        for lab, cond in part.conditions.items():
            if isinstance(cond, (NeumannBC, RobinBC)):
                b += dense_boundary_load(mesh, [lab], scenario.member_bc_fn(j, lab), t1)
        Aj = A.copy()
        if dirichlet:
            idx = np.array(sorted(dirichlet), dtype=int)
            vals = np.array(
                [
                    float(
                        scenario.member_bc_fn(j, dirichlet[int(i)])(
                            mesh.vertices[i, 0], mesh.vertices[i, 1], t1
                        )
                    )
                    for i in idx
                ]
            )
            b = b - Aj[:, idx] @ vals
            Aj[idx, :] = 0.0
            Aj[:, idx] = 0.0
            Aj[idx, idx] = 1.0
            b[idx] = vals
        results.append(np.linalg.solve(Aj, b))
    return results
