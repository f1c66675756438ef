"""P1 finite-element assembly, Dirichlet elimination, interpolation, norms.

All matrices are assembled by mirrored insertion into a fixed sparsity
pattern that is precomputed once per mesh, so repeated coefficient-dependent
assemblies (the per-step hot path) only recompute values.  The scatter into
the pattern goes through :mod:`ensheat.backend`.

Quadrature: a 3-point degree-2 rule for assembly and a 6-point degree-4 rule
for error norms, so quadrature error stays well below the discretization
error being measured.
"""

from __future__ import annotations

import hashlib
import weakref
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from . import backend
from .conductivity import ConductivityModel, clamped_with_count
from .mesh import Mesh, triangle_areas

__all__ = [
    "SparseSymMatrix",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_boundary_mass",
    "assemble_load",
    "assemble_boundary_load",
    "apply_dirichlet",
    "interpolate",
    "error_norms",
    "l2_norm",
    "quadratic_form",
]

# barycentric coordinates / weights; weights sum to 1 (multiply by |K|)
_QR2_LAMBDA = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
_QR2_W = np.full(3, 1.0 / 3.0)

_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
_QR4_LAMBDA = np.array(
    [
        [1.0 - 2.0 * _A1, _A1, _A1],
        [_A1, 1.0 - 2.0 * _A1, _A1],
        [_A1, _A1, 1.0 - 2.0 * _A1],
        [1.0 - 2.0 * _A2, _A2, _A2],
        [_A2, 1.0 - 2.0 * _A2, _A2],
        [_A2, _A2, 1.0 - 2.0 * _A2],
    ]
)
_QR4_W = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

# 3-point Gauss-Legendre on [0, 1] for boundary loads
_EDGE_S = np.array([0.5 - np.sqrt(0.15), 0.5, 0.5 + np.sqrt(0.15)])
_EDGE_W = np.array([5.0, 8.0, 5.0]) / 18.0

_REF_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
_REF_EDGE_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


class SparseSymMatrix:
    """Compressed sparse row matrix with a structurally symmetric pattern.

    Values of symmetric matrices are assembled once and mirrored, so
    ``value(i, j) == value(j, i)`` holds exactly.
    """

    def __init__(self, n, indptr, indices, data, symmetric=True):
        self.n = int(n)
        self.indptr = np.asarray(indptr)
        self.indices = np.asarray(indices)
        self.data = np.asarray(data, dtype=np.float64)
        self.symmetric = bool(symmetric)
        self._scipy = None

    @classmethod
    def from_scipy(cls, mat, symmetric=True):
        csr = sp.csr_matrix(mat)
        csr.sort_indices()
        return cls(csr.shape[0], csr.indptr, csr.indices, csr.data, symmetric)

    def to_scipy(self) -> sp.csr_matrix:
        # treated as immutable once assembled, so the view is cached
        if self._scipy is None:
            self._scipy = sp.csr_matrix(
                (self.data, self.indices, self.indptr), shape=(self.n, self.n)
            )
        return self._scipy

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.to_scipy() @ x

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def copy(self) -> "SparseSymMatrix":
        return SparseSymMatrix(
            self.n, self.indptr, self.indices, self.data.copy(), self.symmetric
        )

    def fingerprint(self) -> str:
        """Hash of pattern and values; identical matrices share it."""
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(np.ascontiguousarray(self.indptr, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.indices, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.data).tobytes())
        return h.hexdigest()

    @staticmethod
    def combine(terms) -> "SparseSymMatrix":
        """Linear combination ``sum(coef * mat)`` over (coef, matrix) pairs."""
        acc = None
        for coef, mat in terms:
            piece = mat.to_scipy() * float(coef)
            acc = piece if acc is None else acc + piece
        acc = acc.tocsr()
        acc.sum_duplicates()
        acc.sort_indices()
        return SparseSymMatrix.from_scipy(acc)


# --- cached per-mesh geometry and patterns --------------------------------


class _TriGeometry:
    def __init__(self, mesh: Mesh):
        tri = mesh.triangles
        p = mesh.vertices[tri]  # (nt, 3, 2)
        self.areas = triangle_areas(mesh)
        # gradients of the barycentric basis: grad(lambda_i) = (b_i, c_i)
        x, y = p[..., 0], p[..., 1]
        inv2a = 1.0 / (2.0 * self.areas)
        nxt = [1, 2, 0]
        prv = [2, 0, 1]
        self.b = (y[:, nxt] - y[:, prv]) * inv2a[:, None]
        self.c = (x[:, prv] - x[:, nxt]) * inv2a[:, None]
        # element stiffness for unit coefficient
        self.gstiff = (
            np.einsum("ei,ej->eij", self.b, self.b)
            + np.einsum("ei,ej->eij", self.c, self.c)
        ) * self.areas[:, None, None]
        self.mloc = self.areas[:, None, None] * _REF_MASS
        # degree-2 quadrature points in physical coordinates, (nt, q)
        self.q2x = np.einsum("qi,ei->eq", _QR2_LAMBDA, x)
        self.q2y = np.einsum("qi,ei->eq", _QR2_LAMBDA, y)

        # CSR pattern of all vertex couplings, plus the slot of each local
        # (i, j) entry so value assembly is a pure scatter
        n = mesh.num_vertices
        rows = np.repeat(tri, 3, axis=1).ravel()
        cols = np.tile(tri, (1, 3)).ravel()
        pattern = sp.csr_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(n, n)
        )
        pattern.sum_duplicates()
        pattern.sort_indices()
        self.indptr = pattern.indptr.copy()
        self.indices = pattern.indices.copy()
        self.nnz = pattern.nnz
        lut = sp.csr_matrix(
            (np.arange(1, self.nnz + 1, dtype=np.int64), self.indices, self.indptr),
            shape=(n, n),
        )
        slots = np.asarray(lut[rows, cols]).ravel() - 1
        if np.any(slots < 0):
            raise AssertionError("pattern slot lookup failed")
        # rows/cols were laid out as (e, i, j) row-major
        self.pos = np.ascontiguousarray(slots, dtype=np.int64)


class _EdgeGeometry:
    def __init__(self, mesh: Mesh, labels: frozenset):
        idx = mesh.edges_with_labels(labels)
        self.edges = np.ascontiguousarray(mesh.boundary_edges[idx], dtype=np.int32)
        p = mesh.vertices[self.edges]  # (ne, 2, 2)
        d = p[:, 1] - p[:, 0]
        self.lengths = np.hypot(d[:, 0], d[:, 1])
        self.qx = p[:, 0, 0][:, None] + np.outer(d[:, 0], _EDGE_S)
        self.qy = p[:, 0, 1][:, None] + np.outer(d[:, 1], _EDGE_S)

        n = mesh.num_vertices
        rows = np.repeat(self.edges, 2, axis=1).ravel()
        cols = np.tile(self.edges, (1, 2)).ravel()
        pattern = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        pattern.sum_duplicates()
        pattern.sort_indices()
        self.indptr = pattern.indptr.copy()
        self.indices = pattern.indices.copy()
        self.nnz = pattern.nnz
        lut = sp.csr_matrix(
            (np.arange(1, self.nnz + 1, dtype=np.int64), self.indices, self.indptr),
            shape=(n, n),
        )
        self.pos = np.ascontiguousarray(
            np.asarray(lut[rows, cols]).ravel() - 1, dtype=np.int64
        )


_tri_cache: "weakref.WeakKeyDictionary[Mesh, _TriGeometry]" = weakref.WeakKeyDictionary()
_edge_cache: "weakref.WeakKeyDictionary[Mesh, dict]" = weakref.WeakKeyDictionary()


def _geometry(mesh: Mesh) -> _TriGeometry:
    geom = _tri_cache.get(mesh)
    if geom is None:
        geom = _TriGeometry(mesh)
        _tri_cache[mesh] = geom
    return geom


def _edge_geometry(mesh: Mesh, labels: Iterable[str]) -> _EdgeGeometry:
    key = frozenset(labels)
    per_mesh = _edge_cache.setdefault(mesh, {})
    geom = per_mesh.get(key)
    if geom is None:
        geom = _EdgeGeometry(mesh, key)
        per_mesh[key] = geom
    return geom


def _eval_field(fn: Callable, x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
    vals = fn(x, y, t)
    return np.broadcast_to(np.asarray(vals, dtype=np.float64), x.shape)


# --- matrix and vector assembly -------------------------------------------


def assemble_mass(mesh: Mesh) -> SparseSymMatrix:
    """Mass matrix M_ij = integral of phi_i phi_j over the domain (SPD)."""
    geom = _geometry(mesh)
    data = np.zeros(geom.nnz)
    backend.scatter_add(data, geom.pos, geom.mloc.ravel())
    return SparseSymMatrix(mesh.num_vertices, geom.indptr, geom.indices, data)


def element_coefficients(mesh, coeff, model, mode):
    """Per-element diffusion coefficient at the assembly quadrature points.

    Returns ``(values, violations)`` where ``values[e]`` is the quadrature
    average of the coefficient over element ``e`` and ``violations`` counts
    clamped conductivity evaluations.
    """
    geom = _geometry(mesh)
    nt = mesh.num_triangles
    if mode == "identity":
        return np.ones(nt), 0
    if model is None:
        raise ValueError(f"mode {mode!r} requires a conductivity model")
    if coeff is None:
        raise ValueError(f"mode {mode!r} requires a nodal field or constant")
    if np.isscalar(coeff):
        temps = np.full((nt, _QR2_LAMBDA.shape[0]), float(coeff))
    else:
        coeff = np.asarray(coeff, dtype=np.float64)
        if coeff.shape != (mesh.num_vertices,):
            raise ValueError("coefficient field length must match vertex count")
        temps = np.einsum("ei,qi->eq", coeff[mesh.triangles], _QR2_LAMBDA)
    kappa, violations = clamped_with_count(model, temps)
    avg = kappa @ _QR2_W
    if mode == "kappa_of":
        return avg, violations
    if mode == "kappa_prime_of":
        return model.kappa_max - avg, violations
    raise ValueError(f"unknown stiffness mode: {mode!r}")


def assemble_stiffness(
    mesh: Mesh,
    coeff=None,
    model: ConductivityModel | None = None,
    mode: str = "identity",
) -> SparseSymMatrix:
    """Stiffness matrix K_ij = integral of c(x) grad(phi_i).grad(phi_j).

    ``mode`` selects the coefficient c(x): ``identity`` (c = 1), ``kappa_of``
    (c = kappa(T_h)), or ``kappa_prime_of`` (c = kappa_max - kappa(T_h)),
    with T_h the P1 interpolant of ``coeff`` evaluated at quadrature points.
    """
    ck, _ = element_coefficients(mesh, coeff, model, mode)
    return stiffness_from_coefficients(mesh, ck)


def stiffness_from_coefficients(mesh: Mesh, ck: np.ndarray) -> SparseSymMatrix:
    """Scatter per-element coefficients against the cached element stiffness."""
    geom = _geometry(mesh)
    data = np.zeros(geom.nnz)
    vals = ck[:, None, None] * geom.gstiff
    backend.scatter_add(data, geom.pos, vals.ravel())
    return SparseSymMatrix(mesh.num_vertices, geom.indptr, geom.indices, data)


def assemble_boundary_mass(mesh: Mesh, labels, alpha: float) -> SparseSymMatrix:
    """Boundary mass R_ij = alpha * integral of phi_i phi_j over the segments."""
    geom = _edge_geometry(mesh, labels)
    data = np.zeros(geom.nnz)
    vals = float(alpha) * geom.lengths[:, None, None] * _REF_EDGE_MASS
    backend.scatter_add(data, geom.pos, vals.ravel())
    return SparseSymMatrix(mesh.num_vertices, geom.indptr, geom.indices, data)


def assemble_load(mesh: Mesh, f: Callable, t: float) -> np.ndarray:
    """Load vector b_i = integral of f(x, t) phi_i by elementwise quadrature."""
    geom = _geometry(mesh)
    fq = _eval_field(f, geom.q2x, geom.q2y, t)
    contrib = geom.areas[:, None] * np.einsum("eq,q,qi->ei", fq, _QR2_W, _QR2_LAMBDA)
    b = np.zeros(mesh.num_vertices)
    backend.scatter_add_rows(b, mesh.triangles, np.ascontiguousarray(contrib))
    return b


def assemble_boundary_load(mesh: Mesh, labels, g: Callable, t: float) -> np.ndarray:
    """Boundary load b_i = integral of g phi_i over the selected segments."""
    geom = _edge_geometry(mesh, labels)
    b = np.zeros(mesh.num_vertices)
    if geom.edges.shape[0] == 0:
        return b
    gq = _eval_field(g, geom.qx, geom.qy, t)
    shape = np.stack([1.0 - _EDGE_S, _EDGE_S])  # (local node, quad point)
    contrib = geom.lengths[:, None] * np.einsum("eq,q,iq->ei", gq, _EDGE_W, shape)
    backend.scatter_add_rows(b, geom.edges, np.ascontiguousarray(contrib))
    return b


# --- Dirichlet elimination -------------------------------------------------


def _resolve_nodes(nodes) -> tuple[np.ndarray, np.ndarray]:
    seen: dict[int, float] = {}
    for idx, val in nodes:
        idx = int(idx)
        val = float(val)
        if idx in seen and seen[idx] != val:
            raise ValueError(f"node {idx} constrained with conflicting values")
        seen[idx] = val
    idx = np.fromiter(seen.keys(), dtype=np.int64, count=len(seen))
    vals = np.fromiter(seen.values(), dtype=np.float64, count=len(seen))
    order = np.argsort(idx)
    return idx[order], vals[order]


def eliminate_rows_cols(A: SparseSymMatrix, idx: np.ndarray) -> SparseSymMatrix:
    """Zero the constrained rows and columns and put 1 on their diagonal."""
    out = A.copy()
    if idx.size == 0:
        return out
    constrained = np.zeros(A.n, dtype=bool)
    constrained[idx] = True
    rows = np.repeat(np.arange(A.n), np.diff(out.indptr))
    mask = constrained[rows] | constrained[out.indices]
    out.data[mask] = 0.0
    for i in idx:
        start, stop = out.indptr[i], out.indptr[i + 1]
        k = np.searchsorted(out.indices[start:stop], i)
        if k >= stop - start or out.indices[start + k] != i:
            raise ValueError(f"no diagonal entry stored for constrained node {i}")
        out.data[start + k] = 1.0
    return out


def lift_rhs(
    b: np.ndarray, A: SparseSymMatrix, idx: np.ndarray, vals: np.ndarray
) -> np.ndarray:
    """Move known boundary values to the right-hand side; b may be 2D (n, J)."""
    out = np.array(b, dtype=np.float64, copy=True)
    if idx.size:
        cols = A.to_scipy().tocsc()[:, idx]
        out -= cols @ vals
        out[idx] = vals
    return out


def apply_dirichlet(A: SparseSymMatrix, b: np.ndarray, nodes):
    """Symmetric elimination of prescribed nodal values.

    For each constrained node i with value g: ``b_j -= A_ji * g`` for the
    free rows j, row/column i are zeroed, ``A_ii = 1`` and ``b_i = g``.  The
    matrix stays symmetric and its restriction to free nodes stays SPD.
    """
    idx, vals = _resolve_nodes(nodes)
    return eliminate_rows_cols(A, idx), lift_rhs(b, A, idx, vals)


# --- nodal fields and norms -------------------------------------------------


def interpolate(mesh: Mesh, u: Callable, t: float) -> np.ndarray:
    """Nodal interpolant: coefficients u(vertex, t)."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    return np.array(np.broadcast_to(np.asarray(u(x, y, t), dtype=np.float64), x.shape))


def error_norms(
    mesh: Mesh,
    u_h: np.ndarray,
    u_exact: Callable,
    grad_u_exact: Callable,
    t: float,
) -> tuple[float, float]:
    """L2 and H1-seminorm errors of a P1 field against an exact solution.

    ``grad_u_exact(x, y, t)`` must return the pair (du/dx, du/dy).  Uses the
    degree-4 rule so quadrature error does not pollute measured rates.
    """
    geom = _geometry(mesh)
    u_h = np.asarray(u_h, dtype=np.float64)
    p = mesh.vertices[mesh.triangles]
    qx = np.einsum("qi,ei->eq", _QR4_LAMBDA, p[..., 0])
    qy = np.einsum("qi,ei->eq", _QR4_LAMBDA, p[..., 1])

    local = u_h[mesh.triangles]
    uh_q = np.einsum("ei,qi->eq", local, _QR4_LAMBDA)
    ue_q = _eval_field(u_exact, qx, qy, t)
    l2_sq = np.sum(geom.areas * ((uh_q - ue_q) ** 2 @ _QR4_W))

    gxh = np.einsum("ei,ei->e", local, geom.b)
    gyh = np.einsum("ei,ei->e", local, geom.c)
    gex, gey = grad_u_exact(qx, qy, t)
    gex = np.broadcast_to(np.asarray(gex, dtype=np.float64), qx.shape)
    gey = np.broadcast_to(np.asarray(gey, dtype=np.float64), qx.shape)
    dx = gxh[:, None] - gex
    dy = gyh[:, None] - gey
    h1_sq = np.sum(geom.areas * ((dx * dx + dy * dy) @ _QR4_W))

    return float(np.sqrt(l2_sq)), float(np.sqrt(h1_sq))


def quadratic_form(A: SparseSymMatrix, x: np.ndarray) -> float:
    return float(x @ A.matvec(x))


def l2_norm(mass: SparseSymMatrix, u: np.ndarray) -> float:
    """Exact L2 norm of a P1 field via the mass matrix."""
    return float(np.sqrt(max(quadratic_form(mass, u), 0.0)))
