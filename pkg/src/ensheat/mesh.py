"""Conforming triangulations of 2D polygonal domains with labelled boundaries.

A :class:`Mesh` stores vertices, counter-clockwise triangles, and boundary
edges tagged with string labels (e.g. ``"left"``).  Labels are mapped to
boundary conditions by a :class:`BoundaryPartition`, so one mesh can serve
several problem setups.  Meshes are validated on construction and treated as
immutable afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

__all__ = [
    "Mesh",
    "MeshFormatError",
    "MeshValidationError",
    "DirichletBC",
    "NeumannBC",
    "RobinBC",
    "BoundaryPartition",
    "build_structured_mesh",
    "import_mesh",
    "export_mesh",
    "mesh_size",
    "triangle_areas",
]

STRUCTURED_LABELS = ("bottom", "right", "top", "left")


class MeshValidationError(ValueError):
    """A mesh violates a structural invariant (named in the message)."""


class MeshFormatError(ValueError):
    """A mesh file could not be parsed; the message carries the line number."""


class Mesh:
    """Triangulation of a polygonal domain.

    Parameters
    ----------
    vertices : (nv, 2) float array
        Vertex coordinates.
    triangles : (nt, 3) int array
        Vertex indices per triangle, counter-clockwise.
    boundary_edges : (nb, 2) int array
        Vertex-index pairs of the boundary edges.
    boundary_labels : sequence of str
        Segment label of each boundary edge, aligned with ``boundary_edges``.
    """

    def __init__(self, vertices, triangles, boundary_edges, boundary_labels):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int32)
        self.boundary_edges = np.ascontiguousarray(boundary_edges, dtype=np.int32)
        self.boundary_labels = tuple(str(s) for s in boundary_labels)
        self._validate()
        for arr in (self.vertices, self.triangles, self.boundary_edges):
            arr.flags.writeable = False

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def labels(self) -> frozenset:
        return frozenset(self.boundary_labels)

    def edges_with_labels(self, labels: Iterable[str]) -> np.ndarray:
        """Indices into ``boundary_edges`` whose label is in ``labels``."""
        wanted = set(labels)
        unknown = wanted - self.labels
        if unknown:
            raise ValueError(f"unknown boundary labels: {sorted(unknown)}")
        idx = [i for i, lab in enumerate(self.boundary_labels) if lab in wanted]
        return np.asarray(idx, dtype=np.int64)

    def boundary_vertices(self, labels: Iterable[str] | None = None) -> np.ndarray:
        """Sorted vertex indices lying on the selected boundary segments."""
        if labels is None:
            edges = self.boundary_edges
        else:
            edges = self.boundary_edges[self.edges_with_labels(labels)]
        return np.unique(edges)

    def _validate(self) -> None:
        nv = self.vertices.shape[0]
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshValidationError("vertices must be an (nv, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshValidationError("triangles must be an (nt, 3) array")
        if self.boundary_edges.ndim != 2 or self.boundary_edges.shape[1] != 2:
            raise MeshValidationError("boundary_edges must be an (nb, 2) array")
        if len(self.boundary_labels) != self.boundary_edges.shape[0]:
            raise MeshValidationError("one label required per boundary edge")

        if self.triangles.size and (
            self.triangles.min() < 0 or self.triangles.max() >= nv
        ):
            raise MeshValidationError("triangle vertex index out of range")
        if self.boundary_edges.size and (
            self.boundary_edges.min() < 0 or self.boundary_edges.max() >= nv
        ):
            raise MeshValidationError("boundary edge vertex index out of range")
        if self.triangles.shape[0] == 0:
            raise MeshValidationError("mesh has no triangles")

        areas = triangle_areas(self)
        if np.any(areas <= 0.0):
            bad = int(np.argmax(areas <= 0.0))
            raise MeshValidationError(
                f"triangle {bad} has negative area (vertices must be counter-clockwise)"
            )

        # Edge incidence: interior edges belong to exactly 2 triangles and the
        # incidence-1 edges must coincide with the declared boundary edges.
        tri = self.triangles
        edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        edges = np.sort(edges, axis=1)
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshValidationError("an edge is shared by more than 2 triangles")
        rim = {tuple(e) for e in uniq[counts == 1]}
        declared = [tuple(sorted(e)) for e in self.boundary_edges]
        if len(set(declared)) != len(declared):
            raise MeshValidationError("duplicate boundary edge")
        if set(declared) != rim:
            raise MeshValidationError(
                "boundary edges must cover the mesh rim exactly once"
            )


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Signed area of every triangle (positive for counter-clockwise)."""
    p = mesh.vertices[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def mesh_size(mesh: Mesh) -> float:
    """Maximum element length h: the longest edge over all triangles."""
    p = mesh.vertices[mesh.triangles]
    lengths = [
        np.hypot(*(p[:, i] - p[:, j]).T) for i, j in ((0, 1), (1, 2), (2, 0))
    ]
    return float(np.max(lengths))


def build_structured_mesh(m: int, pattern: str = "uniform-diagonal") -> Mesh:
    """Uniform triangulation of the unit square [0,1]^2.

    The square is divided into ``m`` x ``m`` cells, each split along the same
    diagonal (lower-left to upper-right), giving 2*m^2 triangles and (m+1)^2
    vertices.  Boundary edges are labelled ``bottom``, ``right``, ``top``,
    ``left``.
    """
    if pattern != "uniform-diagonal":
        raise ValueError(f"unknown mesh pattern: {pattern!r}")
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError("m must be a positive integer")

    side = np.arange(m + 1) / m
    xs, ys = np.meshgrid(side, side)  # row-major: vertex i = iy*(m+1) + ix
    vertices = np.column_stack([xs.ravel(), ys.ravel()])

    def vid(ix, iy):
        return iy * (m + 1) + ix

    triangles = []
    for iy in range(m):
        for ix in range(m):
            ll = vid(ix, iy)
            lr = vid(ix + 1, iy)
            ul = vid(ix, iy + 1)
            ur = vid(ix + 1, iy + 1)
            triangles.append((ll, lr, ur))
            triangles.append((ll, ur, ul))

    edges = []
    labels = []
    for ix in range(m):  # bottom, left to right
        edges.append((vid(ix, 0), vid(ix + 1, 0)))
        labels.append("bottom")
    for iy in range(m):  # right, upwards
        edges.append((vid(m, iy), vid(m, iy + 1)))
        labels.append("right")
    for ix in range(m, 0, -1):  # top, right to left
        edges.append((vid(ix, m), vid(ix - 1, m)))
        labels.append("top")
    for iy in range(m, 0, -1):  # left, downwards
        edges.append((vid(0, iy), vid(0, iy - 1)))
        labels.append("left")

    return Mesh(vertices, triangles, edges, labels)


def import_mesh(text: str) -> Mesh:
    """Parse the plain-text mesh format.

    Format: ``vertices N`` then N lines ``x y``; ``triangles M`` then M lines
    ``i j k`` (0-based, counter-clockwise); ``boundary_edges B`` then B lines
    ``i j label``.  Raises :class:`MeshFormatError` with the offending line
    number on parse failure and :class:`MeshValidationError` if the parsed
    mesh violates an invariant.
    """
    lines = text.splitlines()
    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            pos += 1
            stripped = lines[pos - 1].strip()
            if stripped:
                return pos, stripped
        raise MeshFormatError(f"line {len(lines) + 1}: unexpected end of file")

    def expect_count(keyword):
        lineno, content = next_line()
        parts = content.split()
        if len(parts) != 2 or parts[0] != keyword:
            raise MeshFormatError(f"line {lineno}: expected '{keyword} <count>'")
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad count {parts[1]!r}") from None
        if count < 0:
            raise MeshFormatError(f"line {lineno}: negative count")
        return count

    nv = expect_count("vertices")
    vertices = np.empty((nv, 2))
    for i in range(nv):
        lineno, content = next_line()
        parts = content.split()
        if len(parts) != 2:
            raise MeshFormatError(f"line {lineno}: expected 'x y'")
        try:
            vertices[i] = [float(parts[0]), float(parts[1])]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad coordinate") from None

    nt = expect_count("triangles")
    triangles = np.empty((nt, 3), dtype=np.int64)
    for i in range(nt):
        lineno, content = next_line()
        parts = content.split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {lineno}: expected 'i j k'")
        try:
            triangles[i] = [int(p) for p in parts]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad vertex index") from None

    nb = expect_count("boundary_edges")
    edges = np.empty((nb, 2), dtype=np.int64)
    labels = []
    for i in range(nb):
        lineno, content = next_line()
        parts = content.split()
        if len(parts) != 3:
            raise MeshFormatError(f"line {lineno}: expected 'i j label'")
        try:
            edges[i] = [int(parts[0]), int(parts[1])]
        except ValueError:
            raise MeshFormatError(f"line {lineno}: bad vertex index") from None
        labels.append(parts[2])

    while pos < len(lines):
        pos += 1
        if lines[pos - 1].strip():
            raise MeshFormatError(f"line {pos}: trailing content")

    return Mesh(vertices, triangles, edges, labels)


def export_mesh(mesh: Mesh) -> str:
    """Serialize a mesh to the text format read by :func:`import_mesh`.

    Coordinates use shortest round-trip decimal form, so import/export of a
    canonical file is bit-identical.
    """
    out = [f"vertices {mesh.num_vertices}"]
    for x, y in mesh.vertices:
        out.append(f"{float(x)!r} {float(y)!r}")
    out.append(f"triangles {mesh.num_triangles}")
    for i, j, k in mesh.triangles:
        out.append(f"{i} {j} {k}")
    out.append(f"boundary_edges {len(mesh.boundary_labels)}")
    for (i, j), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
        out.append(f"{i} {j} {lab}")
    return "\n".join(out) + "\n"


# --- boundary conditions -------------------------------------------------

BoundaryData = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class DirichletBC:
    """Prescribed temperature g(x, y, t) on a boundary segment."""

    value: BoundaryData


@dataclass(frozen=True)
class NeumannBC:
    """Prescribed conductive flux q(x, y, t) on a boundary segment."""

    flux: BoundaryData


@dataclass(frozen=True)
class RobinBC:
    """Exchange condition with emissivity ``alpha`` and datum ``beta(x, y, t)``."""

    alpha: float
    beta: BoundaryData

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("Robin alpha must lie in [0, 1]")


class BoundaryPartition:
    """Map of segment label to boundary condition.

    A partition is either mixed-type (Dirichlet and/or Neumann segments only)
    or Robin-type (Robin on every segment); mixing Robin with the other kinds
    is rejected, as is a Robin partition with differing alpha values.
    """

    def __init__(self, conditions: Mapping[str, object]):
        self.conditions = dict(conditions)
        kinds = {type(c) for c in self.conditions.values()}
        if not self.conditions:
            raise ValueError("boundary partition is empty")
        bad = kinds - {DirichletBC, NeumannBC, RobinBC}
        if bad:
            raise TypeError(f"unsupported boundary condition type: {bad}")
        if RobinBC in kinds and kinds != {RobinBC}:
            raise ValueError(
                "Robin conditions cannot be mixed with Dirichlet/Neumann segments"
            )
        if kinds == {RobinBC}:
            alphas = {c.alpha for c in self.conditions.values()}
            if len(alphas) != 1:
                raise ValueError("all Robin segments must share one alpha")

    @property
    def kind(self) -> str:
        """``"robin"`` if every segment is Robin, else ``"mixed"``."""
        if all(isinstance(c, RobinBC) for c in self.conditions.values()):
            return "robin"
        return "mixed"

    @property
    def robin_alpha(self) -> float:
        if self.kind != "robin":
            raise ValueError("not a Robin partition")
        return next(iter(self.conditions.values())).alpha

    def labels_of(self, bc_type) -> list[str]:
        return [lab for lab, c in self.conditions.items() if isinstance(c, bc_type)]

    def validate_against(self, mesh: Mesh) -> None:
        missing = mesh.labels - set(self.conditions)
        if missing:
            raise ValueError(f"no boundary condition for labels: {sorted(missing)}")
        unknown = set(self.conditions) - mesh.labels
        if unknown:
            raise ValueError(f"conditions for labels absent from mesh: {sorted(unknown)}")
