"""Legacy-VTK ASCII output of nodal scalar fields for external viewers."""

from __future__ import annotations

from pathlib import Path

from .mesh import Mesh

__all__ = ["write_vtk"]


def write_vtk(path, mesh: Mesh, point_data: dict, title: str = "ensheat fields") -> None:
    """Write an unstructured-grid file with one scalar array per entry.

    ``point_data`` maps array names to nodal vectors; values are printed
    with 9 significant digits.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "# vtk DataFile Version 2.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.num_vertices} double",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{x:.9g} {y:.9g} 0")
    nt = mesh.num_triangles
    lines.append(f"CELLS {nt} {4 * nt}")
    for i, j, k in mesh.triangles:
        lines.append(f"3 {i} {j} {k}")
    lines.append(f"CELL_TYPES {nt}")
    lines.extend(["5"] * nt)
    lines.append(f"POINT_DATA {mesh.num_vertices}")
    for name, values in point_data.items():
        if len(values) != mesh.num_vertices:
            raise ValueError(f"field {name!r} length does not match vertex count")
        lines.append(f"SCALARS {name} double")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{float(v):.9g}" for v in values)
    path.write_text("\n".join(lines) + "\n")
