"""Convergence, perturbation, ensemble-size, steady-state, and pulse studies.

Errors of the ensemble-average temperature are measured in the discrete
norms max_n ||<e>^n||_L2 and (dt sum_n ||grad <e>^n||^2)^(1/2) over all time
levels n = 0..N.  Convergence rates between two resolutions follow
log2(e1/e2) / log2(dt1/dt2).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .assembly import error_norms, l2_norm
from .ensemble import TimeSeries, ensemble_mean, run, run_until_steady
from .manufactured import (
    STEADY_SAMPLE_POINTS,
    ManufacturedCase,
    manufactured_scenario,
    printing_scenario,
    steady_scenario,
)

__all__ = [
    "triple_norms",
    "convergence_rate",
    "ConvergenceTable",
    "convergence_study",
    "perturbation_study",
    "ensemble_size_study",
    "steady_state_analytic",
    "steady_state_study",
    "printing_norms",
    "write_csv",
]

FLOAT_FMT = "%.5E"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FMT % float(value)


def write_csv(path, header: Sequence[str], rows) -> None:
    """Write a study table; floats in scientific notation, 6 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def triple_norms(series: TimeSeries, exact: Callable, exact_grad: Callable):
    """Discrete error norms of the ensemble mean over the whole trajectory.

    Returns ``(inf_l2, l2_h1)``: the max-over-time L2 error and the
    dt-weighted root-sum-square of the H1-seminorm error, both of the mean
    field against the exact solution.  The series must have been recorded at
    every time level.
    """
    scenario = series.scenario
    levels = series.snapshot_levels()
    if levels != list(range(len(series.times))):
        raise ValueError("triple norms need snapshots at every time level")
    inf_l2 = 0.0
    h1_sq_sum = 0.0
    for level, fields in series.snapshots:
        mean = np.mean(fields, axis=0)
        t = series.times[level]
        l2, h1 = error_norms(scenario.mesh, mean, exact, exact_grad, t)
        inf_l2 = max(inf_l2, l2)
        h1_sq_sum += h1 * h1
    return inf_l2, float(np.sqrt(scenario.dt * h1_sq_sum))


def convergence_rate(e1: float, dt1: float, e2: float, dt2: float) -> float:
    """log2(e1/e2) / log2(dt1/dt2) between two (error, step) pairs."""
    if min(e1, dt1, e2, dt2) <= 0.0:
        raise ValueError("errors and steps must be positive")
    return float(np.log2(e1 / e2) / np.log2(dt1 / dt2))


@dataclass
class ConvergenceTable:
    """Rows of (m, dt, inf_l2 error, rate, l2_h1 error, rate)."""

    kind: str
    rows: list[tuple]

    HEADER = ("m", "dt", "err_inf_l2", "rate_inf_l2", "err_l2_h1", "rate_l2_h1")

    def to_csv(self, path) -> None:
        write_csv(path, self.HEADER, self.rows)


def _run_case(case: ManufacturedCase, solver="cholesky", threads=1):
    series = run(case.scenario, solver=solver, threads=threads)
    return triple_norms(series, case.exact, case.exact_grad)


def convergence_study(
    kind: str,
    ms: Sequence[int] = (4, 8, 16, 32, 64),
    l: int = 1,
    J: int = 4,
    solver: str = "cholesky",
    threads: int = 1,
) -> ConvergenceTable:
    """Refinement study with dt = 0.5/m; rates between adjacent rows."""
    rows = []
    prev = None
    for m in ms:
        case = manufactured_scenario(kind, l=l, J=J, m=m)
        dt = case.scenario.dt
        inf_l2, l2_h1 = _run_case(case, solver=solver, threads=threads)
        if prev is None:
            rows.append((m, dt, inf_l2, None, l2_h1, None))
        else:
            pm, pdt, pinf, _, ph1, _ = prev
            rows.append(
                (
                    m,
                    dt,
                    inf_l2,
                    convergence_rate(pinf, pdt, inf_l2, dt),
                    l2_h1,
                    convergence_rate(ph1, pdt, l2_h1, dt),
                )
            )
        prev = rows[-1]
    return ConvergenceTable(kind, rows)


def perturbation_study(
    kind: str,
    ls: Sequence[int] = (0, 1, 2, 3, 4),
    ms: Sequence[int] = (4, 8, 16, 32, 64),
    J: int = 4,
    solver: str = "cholesky",
    threads: int = 1,
):
    """Max-in-time L2 errors of the mean by (m, perturbation exponent l).

    Returns ``(header, rows)`` with one row per m and one error column per l;
    errors shrink toward the unperturbed discretization error as l grows.
    """
    header = ["m"] + [f"err_l{l}" for l in ls]
    rows = []
    for m in ms:
        row = [m]
        for l in ls:
            case = manufactured_scenario(kind, l=l, J=J, m=m)
            inf_l2, _ = _run_case(case, solver=solver, threads=threads)
            row.append(inf_l2)
        rows.append(tuple(row))
    return header, rows


def ensemble_size_study(
    kind: str = "mixed",
    Js: Sequence[int] = (1, 2, 4, 8, 16, 32, 64),
    m: int = 16,
    l: int = 1,
    solver: str = "cholesky",
    threads: int = 1,
):
    """Mean-error norms versus ensemble size at fixed resolution."""
    header = ["J", "err_inf_l2", "err_l2_h1"]
    rows = []
    for J in Js:
        case = manufactured_scenario(kind, l=l, J=J, m=m)
        inf_l2, l2_h1 = _run_case(case, solver=solver, threads=threads)
        rows.append((J, inf_l2, l2_h1))
    return header, rows


# --- steady-state benchmark ---------------------------------------------------


def _strip_solution(xi, y):
    """Harmonic on the half strip: 1 on xi = 0 (0 < y < 1), 0 on y = 0, 1."""
    with np.errstate(divide="ignore"):
        return (2.0 / np.pi) * np.arctan2(np.sin(np.pi * y), np.sinh(np.pi * xi))


def steady_state_analytic(x, y, images: int = 8):
    """Exact steady temperature of the hot-wall problem.

    The substitution u = T^2 turns the steady nonlinear equation with
    kappa proportional to T into Laplace's equation with u = 40000 on the
    left wall and u = 10000 elsewhere.  The harmonic part is summed as a
    reflected-strip series, which converges geometrically (ratio e^{-2 pi}
    per term, remainder < 1e-8 well before ``images`` = 8) and reproduces
    the boundary data exactly, corners excepted.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(np.broadcast(x, y).shape)
    for k in range(images):
        w = w + _strip_solution(x + 2.0 * k, y) - _strip_solution(2.0 + 2.0 * k - x, y)
    value = np.sqrt(10000.0 + 30000.0 * w)
    return float(value) if value.ndim == 0 else value


def _sample_vertex(mesh, field, x, y):
    match = np.flatnonzero(
        (np.abs(mesh.vertices[:, 0] - x) < 1e-12) & (np.abs(mesh.vertices[:, 1] - y) < 1e-12)
    )
    if match.size != 1:
        raise ValueError(f"sample point ({x}, {y}) is not a mesh vertex")
    return float(field[match[0]])


def steady_state_study(
    ms: Sequence[int] = (8, 16), tol: float = 1e-6, max_steps: int = 50_000
):
    """Approach the steady state at each resolution and sample the benchmark points.

    Returns ``(header, rows)``; each row holds the position, then (T, % error
    against the analytic value) per resolution, then the analytic value.
    """
    header = ["x", "y"]
    for m in ms:
        header += [f"T_m{m}", f"pct_err_m{m}"]
    header.append("analytical")

    fields = {}
    for m in ms:
        scenario = steady_scenario(m)
        result = run_until_steady(scenario, tol=tol, max_steps=max_steps)
        if result.detected is None:
            raise RuntimeError(f"steady state not reached within {max_steps} steps (m={m})")
        fields[m] = (scenario.mesh, result.state.members[0])

    rows = []
    for x, y in STEADY_SAMPLE_POINTS:
        exact = steady_state_analytic(x, y)
        row = [x, y]
        for m in ms:
            mesh, field = fields[m]
            value = _sample_vertex(mesh, field, x, y)
            row += [value, 100.0 * abs(value - exact) / exact]
        row.append(exact)
        rows.append(tuple(row))
    return header, rows


# --- pulse application ---------------------------------------------------------


def printing_norms(solver: str = "cholesky", threads: int = 1):
    """Run the pulse scenario and tabulate per-member and mean L2 norms.

    Returns ``(header, rows, series)``; one row per time level with the three
    member norms and the norm of the averaged field.
    """
    scenario = printing_scenario(snapshot_every=1)
    series = run(scenario, solver=solver, threads=threads)
    system = scenario.system()
    header = ["t", "norm_T1", "norm_T2", "norm_T3", "norm_mean"]
    rows = []
    member_norms = series.member_norm_table()
    for (level, fields), norms in zip(series.snapshots, member_norms):
        mean_norm = l2_norm(system.mass, np.mean(fields, axis=0))
        rows.append((series.times[level], *norms, mean_norm))
    return header, rows, series
