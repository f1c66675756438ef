"""Ensemble time stepping with a shared, time-independent implicit operator.

All J members advance with the same SPD matrix M/dt + kappa_max*D (plus the
Robin boundary mass when applicable): the member-dependent part of the
diffusion, the fluctuation (kappa_max - kappa(T_j^n)), multiplies the known
state and lands on the right-hand side.  The operator therefore contains no
time- or member-dependent coefficient and is factorized exactly once per
run; each step costs one fluctuation assembly and one triangular solve per
member.

The monitored energy per member is ||T||^2 + kappa_max*||grad T||^2,
computed through the mass and diffusion quadratic forms; with zero data it
is non-increasing for any timestep.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .assembly import (
    SparseSymMatrix,
    assemble_boundary_load,
    assemble_boundary_mass,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    element_coefficients,
    eliminate_rows_cols,
    interpolate,
    l2_norm,
    quadratic_form,
    stiffness_from_coefficients,
)
from .conductivity import ConductivityModel
from .mesh import BoundaryPartition, DirichletBC, Mesh, NeumannBC, RobinBC
from .solver import SpdFactor, factorize, pcg_solve, solve_block

__all__ = [
    "MemberSpec",
    "Scenario",
    "EnsembleState",
    "StepReport",
    "TimeSeries",
    "SteadyResult",
    "StaleFactorError",
    "initial_state",
    "shared_operator",
    "prepare_factor",
    "step_mixed",
    "step_robin",
    "run",
    "run_until_steady",
    "ensemble_mean",
    "detect_steady_state",
]


class StaleFactorError(RuntimeError):
    """The supplied factor does not match the scenario's shared operator."""


def _zero_field(x, y, t):
    return np.zeros_like(x)


@dataclass(frozen=True, eq=False)
class MemberSpec:
    """One ensemble member: initial data plus optional per-member data.

    ``initial`` is either a nodal coefficient vector or a callable
    ``u(x, y)``; ``source`` is f(x, y, t) (zero when omitted); ``bc_data``
    overrides the boundary data function of individual labels (the condition
    kind and Robin alpha always come from the scenario partition).
    """

    initial: object
    source: Callable | None = None
    bc_data: Mapping[str, Callable] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Full problem description for an ensemble run."""

    mesh: Mesh
    partition: BoundaryPartition
    model: ConductivityModel
    members: Sequence[MemberSpec]
    dt: float
    t_star: float | None = None
    snapshot_every: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        self.partition.validate_against(self.mesh)
        if len(self.members) < 1:
            raise ValueError("ensemble needs at least one member")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")
        if self.t_star is not None:
            self.num_steps()  # validates divisibility

    @property
    def ensemble_size(self) -> int:
        return len(self.members)

    @property
    def kind(self) -> str:
        return self.partition.kind

    def num_steps(self) -> int:
        if self.t_star is None:
            raise ValueError("scenario has no final time")
        ratio = self.t_star / self.dt
        steps = round(ratio)
        if steps < 1 or abs(ratio - steps) > 1e-9 * max(1.0, abs(ratio)):
            raise ValueError(
                f"dt must divide t_star (t_star/dt = {ratio!r} is not an integer)"
            )
        return steps

    def member_source(self, j: int) -> Callable:
        return self.members[j].source or _zero_field

    def member_bc_fn(self, j: int, label: str) -> Callable:
        override = self.members[j].bc_data.get(label)
        if override is not None:
            return override
        cond = self.partition.conditions[label]
        if isinstance(cond, DirichletBC):
            return cond.value
        if isinstance(cond, NeumannBC):
            return cond.flux
        return cond.beta

    def system(self) -> "_System":
        sys = getattr(self, "_system", None)
        if sys is None:
            sys = _System(self)
            object.__setattr__(self, "_system", sys)
        return sys


@dataclass
class EnsembleState:
    """J nodal temperature fields sharing one mesh at a common time level."""

    time_index: int
    time: float
    members: list[np.ndarray]

    @property
    def ensemble_size(self) -> int:
        return len(self.members)


@dataclass
class StepReport:
    """Per-step diagnostics, one entry per member."""

    step_index: int
    time: float
    energies: np.ndarray
    l2_norms: np.ndarray
    kappa_violations: np.ndarray
    residuals: np.ndarray
    increments_l2: np.ndarray


@dataclass
class TimeSeries:
    """Recorded trajectory of a run."""

    scenario: Scenario
    times: np.ndarray  # all time levels 0..N
    reports: list[StepReport]
    snapshots: list[tuple[int, list[np.ndarray]]]
    initial_l2_norms: np.ndarray

    def snapshot_levels(self) -> list[int]:
        return [n for n, _ in self.snapshots]

    def mean_fields(self) -> list[tuple[int, np.ndarray]]:
        return [(n, np.mean(fields, axis=0)) for n, fields in self.snapshots]

    def member_norm_table(self) -> np.ndarray:
        """(N+1, J) table of per-member L2 norms over all time levels."""
        rows = [self.initial_l2_norms]
        rows.extend(r.l2_norms for r in self.reports)
        return np.vstack(rows)


@dataclass
class SteadyResult:
    state: EnsembleState
    steps_taken: int
    detected: tuple[int, float] | None
    reports: list[StepReport]


class _System:
    """Assembled operators and cached boundary data for one scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        mesh = scenario.mesh
        part = scenario.partition
        self.mass = assemble_mass(mesh)
        self.diffusion = assemble_stiffness(mesh, mode="identity")
        kmax = scenario.model.kappa_max
        terms = [(1.0 / scenario.dt, self.mass), (kmax, self.diffusion)]
        if part.kind == "robin":
            self.robin_mass = assemble_boundary_mass(
                mesh, sorted(mesh.labels), part.robin_alpha
            )
            terms.append((1.0, self.robin_mass))
            self.dirichlet_nodes = np.empty(0, dtype=np.int64)
            self.dirichlet_labels: list[str] = []
        else:
            self.robin_mass = None
            claimed: dict[int, str] = {}
            for label in part.conditions:
                if isinstance(part.conditions[label], DirichletBC):
                    for node in mesh.boundary_vertices([label]):
                        claimed.setdefault(int(node), label)
            nodes = np.array(sorted(claimed), dtype=np.int64)
            self.dirichlet_nodes = nodes
            self.dirichlet_labels = [claimed[int(i)] for i in nodes]
        self.full_matrix = SparseSymMatrix.combine(terms)
        self.operator = (
            eliminate_rows_cols(self.full_matrix, self.dirichlet_nodes)
            if self.dirichlet_nodes.size
            else self.full_matrix
        )
        self.fingerprint = self.operator.fingerprint()
        self.neumann_labels = part.labels_of(NeumannBC)
        self.robin_labels = part.labels_of(RobinBC)
        self._factor: SpdFactor | None = None
        self._dx = mesh.vertices[self.dirichlet_nodes, 0]
        self._dy = mesh.vertices[self.dirichlet_nodes, 1]
        self._lift_cols = (
            self.full_matrix.to_scipy().tocsc()[:, self.dirichlet_nodes]
            if self.dirichlet_nodes.size
            else None
        )
        labels = np.array(self.dirichlet_labels, dtype=object)
        self._dirichlet_groups = [
            (label, np.flatnonzero(labels == label))
            for label in dict.fromkeys(self.dirichlet_labels)
        ]

    @property
    def factor(self) -> SpdFactor:
        if self._factor is None:
            self._factor = factorize(self.operator)
        return self._factor

    def dirichlet_values(self, j: int, t: float) -> np.ndarray:
        vals = np.empty(self.dirichlet_nodes.size)
        for label, where in self._dirichlet_groups:
            fn = self.scenario.member_bc_fn(j, label)
            vals[where] = np.broadcast_to(
                np.asarray(fn(self._dx[where], self._dy[where], t), dtype=np.float64),
                where.shape,
            )
        return vals

    def member_rhs(self, j: int, T: np.ndarray, t_next: float):
        """Right-hand side for one member plus the kappa clamp count."""
        scn = self.scenario
        mesh = scn.mesh
        ck, violations = element_coefficients(mesh, T, scn.model, "kappa_prime_of")
        fluct = stiffness_from_coefficients(mesh, ck)
        b = self.mass.matvec(T) / scn.dt + fluct.matvec(T)
        b += assemble_load(mesh, scn.member_source(j), t_next)
        for label in self.neumann_labels:
            b += assemble_boundary_load(mesh, [label], scn.member_bc_fn(j, label), t_next)
        for label in self.robin_labels:
            b += assemble_boundary_load(mesh, [label], scn.member_bc_fn(j, label), t_next)
        if self.dirichlet_nodes.size:
            vals = self.dirichlet_values(j, t_next)
            b -= self._lift_cols @ vals
            b[self.dirichlet_nodes] = vals
        return b, violations

    def energy(self, T: np.ndarray) -> float:
        return quadratic_form(self.mass, T) + self.scenario.model.kappa_max * quadratic_form(
            self.diffusion, T
        )

    def step(
        self,
        state: EnsembleState,
        factor: SpdFactor | None = None,
        solver: str = "cholesky",
        threads: int = 1,
    ) -> tuple[EnsembleState, StepReport]:
        scn = self.scenario
        J = scn.ensemble_size
        if len(state.members) != J:
            raise ValueError("state ensemble size does not match scenario")
        t_next = (state.time_index + 1) * scn.dt

        rhs = [None] * J
        violations = np.zeros(J, dtype=np.int64)

        def build(j):
            rhs[j], violations[j] = self.member_rhs(j, state.members[j], t_next)

        if threads > 1 and J > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(build, range(J)))
        else:
            for j in range(J):
                build(j)
        B = np.column_stack(rhs)

        if solver == "pcg":
            sols = []
            for j in range(J):
                x, _ = pcg_solve(self.operator, B[:, j], tol=1e-10)
                sols.append(x)
        elif solver == "cholesky":
            sols = solve_block(factor if factor is not None else self.factor, B)
        else:
            raise ValueError(f"unknown solver: {solver!r}")

        X = np.column_stack(sols)
        residuals = np.linalg.norm(self.operator.to_scipy() @ X - B, axis=0)
        energies = np.array([self.energy(x) for x in sols])
        l2_norms = np.array([l2_norm(self.mass, x) for x in sols])
        increments = np.array(
            [l2_norm(self.mass, x - told) for x, told in zip(sols, state.members)]
        )
        new_state = EnsembleState(state.time_index + 1, t_next, sols)
        report = StepReport(
            step_index=state.time_index + 1,
            time=t_next,
            energies=energies,
            l2_norms=l2_norms,
            kappa_violations=violations,
            residuals=residuals,
            increments_l2=increments,
        )
        return new_state, report


# --- public operations ------------------------------------------------------


def initial_state(scenario: Scenario) -> EnsembleState:
    """Interpolate the members' initial data onto the mesh at t = 0."""
    fields = []
    for member in scenario.members:
        init = member.initial
        if callable(init):
            fields.append(interpolate(scenario.mesh, lambda x, y, t: init(x, y), 0.0))
        else:
            arr = np.array(init, dtype=np.float64)
            if arr.shape != (scenario.mesh.num_vertices,):
                raise ValueError("initial field length must match vertex count")
            fields.append(arr)
    return EnsembleState(0, 0.0, fields)


def shared_operator(scenario: Scenario) -> SparseSymMatrix:
    """The shared implicit matrix (after Dirichlet elimination when mixed)."""
    return scenario.system().operator


def prepare_factor(scenario: Scenario) -> SpdFactor:
    """Factorize the shared operator (cached: at most one factorization)."""
    return scenario.system().factor


def _checked_step(state, scenario, factor, expected_kind):
    if scenario.kind != expected_kind:
        raise ValueError(f"scenario is {scenario.kind}-type, expected {expected_kind}")
    system = scenario.system()
    if factor.fingerprint != system.fingerprint:
        raise StaleFactorError(
            "factor fingerprint does not match the scenario's shared operator"
        )
    return system.step(state, factor=factor)


def step_mixed(state, scenario, factor) -> tuple[EnsembleState, StepReport]:
    """Advance a mixed-type (Dirichlet/Neumann) ensemble by one step."""
    return _checked_step(state, scenario, factor, "mixed")


def step_robin(state, scenario, factor) -> tuple[EnsembleState, StepReport]:
    """Advance a Robin-type ensemble by one step."""
    return _checked_step(state, scenario, factor, "robin")


def run(scenario: Scenario, solver: str = "cholesky", threads: int = 1) -> TimeSeries:
    """Advance the ensemble over [0, t_star] recording snapshots and reports."""
    steps = scenario.num_steps()
    system = scenario.system()
    state = initial_state(scenario)
    times = np.arange(steps + 1) * scenario.dt
    initial_norms = np.array([l2_norm(system.mass, T) for T in state.members])

    snapshots = [(0, [T.copy() for T in state.members])]
    reports: list[StepReport] = []
    for n in range(steps):
        state, report = system.step(state, solver=solver, threads=threads)
        reports.append(report)
        level = n + 1
        if level % scenario.snapshot_every == 0 or level == steps:
            snapshots.append((level, [T.copy() for T in state.members]))
    return TimeSeries(scenario, times, reports, snapshots, initial_norms)


def run_until_steady(
    scenario: Scenario, tol: float, max_steps: int = 100_000
) -> SteadyResult:
    """Step until max_j ||T^{n+1} - T^n|| / dt < tol (or max_steps)."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    system = scenario.system()
    state = initial_state(scenario)
    reports: list[StepReport] = []
    for n in range(max_steps):
        state, report = system.step(state)
        reports.append(report)
        if report.increments_l2.max() / scenario.dt < tol:
            return SteadyResult(state, n + 1, (n, n * scenario.dt), reports)
    return SteadyResult(state, max_steps, None, reports)


def ensemble_mean(state: EnsembleState) -> np.ndarray:
    """Nodal average of the member fields."""
    if not state.members:
        raise ValueError("empty ensemble")
    return np.mean(state.members, axis=0)


def detect_steady_state(series: TimeSeries, tol: float):
    """First step n with max_j ||T^{n+1} - T^n|| / dt < tol, else None."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    dt = series.scenario.dt
    for n, report in enumerate(series.reports):
        if report.increments_l2.max() / dt < tol:
            return n, n * dt
    return None
