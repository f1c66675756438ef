"""Scenario files: INI sections with expression-valued data functions.

Layout (labels follow the mesh's boundary labels)::

    [mesh]
    structured_m = 64          ; or: file = path/to/mesh.txt

    [conductivity]
    kind = heaviside_quadratic ; exponential | linear | constant | tabulated
    a = 100.0                  ; kind-specific parameters
    t_c = 2.0
    base = 50.0
    kappa_min = 50.0
    kappa_max = 150.0

    [bc.left]
    kind = dirichlet
    value = 1.0                ; expression of x, y, t

    [bc.top]
    kind = neumann
    flux = 1.0

    [source]
    expr = 4000*exp(-8*((x-0.5)**2 + (y-0.5)**2))*gate(t, 0, 0.0005)

    [ensemble]
    initials = 1.0 | 1.25 | 1.5    ; one expression of x, y per member

    [time]
    dt = 0.00025
    t_star = 0.01
    snapshot_every = 1

    [output]
    dir = out
    snapshots = true           ; write VTK fields at the snapshot cadence

Robin sections use ``kind = robin`` with ``alpha`` and ``beta``.  Tabulated
conductivity takes ``points = T1:k1, T2:k2, ...``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .conductivity import ConductivityModel
from .ensemble import MemberSpec, Scenario
from .expressions import ExpressionError, compile_expression
from .mesh import BoundaryPartition, DirichletBC, NeumannBC, RobinBC, build_structured_mesh, import_mesh

__all__ = ["ConfigError", "ScenarioConfig", "load_scenario"]


class ConfigError(ValueError):
    """A scenario file is malformed; the message names section and key."""


def _expr(section: str, key: str, text: str):
    try:
        return compile_expression(text)
    except ExpressionError as exc:
        raise ConfigError(f"[{section}] {key}: {exc}") from None


def _require(parser, section, key):
    if not parser.has_option(section, key):
        raise ConfigError(f"[{section}] missing required key {key!r}")
    return parser.get(section, key)


def _getfloat(parser, section, key, default=None):
    if not parser.has_option(section, key):
        if default is None:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    try:
        return parser.getfloat(section, key)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: not a number") from None


@dataclass
class ScenarioConfig:
    """Parsed scenario file, buildable into a Scenario."""

    scenario: Scenario
    output_dir: str | None
    write_snapshots: bool


def _build_model(parser) -> ConductivityModel:
    section = "conductivity"
    if not parser.has_section(section):
        raise ConfigError("missing [conductivity] section")
    kind = _require(parser, section, "kind").strip()
    lo = _getfloat(parser, section, "kappa_min")
    hi = _getfloat(parser, section, "kappa_max")
    ck = _getfloat(parser, section, "c_kappa", 0.0)
    try:
        if kind == "exponential":
            return ConductivityModel.exponential(_getfloat(parser, section, "c"), lo, hi, ck)
        if kind == "heaviside_quadratic":
            return ConductivityModel.heaviside_quadratic(
                _getfloat(parser, section, "a"),
                _getfloat(parser, section, "t_c"),
                _getfloat(parser, section, "base"),
                lo,
                hi,
                ck,
            )
        if kind == "linear":
            return ConductivityModel.linear(_getfloat(parser, section, "slope"), lo, hi, ck)
        if kind == "constant":
            return ConductivityModel.constant(_getfloat(parser, section, "value"), lo, hi, ck)
        if kind == "tabulated":
            pairs = []
            for item in _require(parser, section, "points").split(","):
                try:
                    t_str, k_str = item.split(":")
                    pairs.append((float(t_str), float(k_str)))
                except ValueError:
                    raise ConfigError(
                        f"[{section}] points: expected 'T:kappa' pairs, got {item!r}"
                    ) from None
            return ConductivityModel.tabulated(pairs, lo, hi, ck)
    except ValueError as exc:
        raise ConfigError(f"[{section}]: {exc}") from None
    raise ConfigError(f"[{section}] unknown kind {kind!r}")


def _build_partition(parser, labels) -> BoundaryPartition:
    conditions = {}
    for label in labels:
        section = f"bc.{label}"
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section for boundary label {label!r}")
        kind = _require(parser, section, "kind").strip()
        if kind == "dirichlet":
            conditions[label] = DirichletBC(
                _expr(section, "value", _require(parser, section, "value"))
            )
        elif kind == "neumann":
            conditions[label] = NeumannBC(
                _expr(section, "flux", _require(parser, section, "flux"))
            )
        elif kind == "robin":
            conditions[label] = RobinBC(
                _getfloat(parser, section, "alpha"),
                _expr(section, "beta", _require(parser, section, "beta")),
            )
        else:
            raise ConfigError(f"[{section}] unknown kind {kind!r}")
    try:
        return BoundaryPartition(conditions)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file."""
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    if not parser.has_section("mesh"):
        raise ConfigError("missing [mesh] section")
    if parser.has_option("mesh", "structured_m"):
        try:
            m = parser.getint("mesh", "structured_m")
        except ValueError:
            raise ConfigError("[mesh] structured_m: not an integer") from None
        try:
            mesh = build_structured_mesh(m)
        except ValueError as exc:
            raise ConfigError(f"[mesh]: {exc}") from None
    elif parser.has_option("mesh", "file"):
        mesh_path = Path(parser.get("mesh", "file"))
        if not mesh_path.is_absolute():
            mesh_path = path.parent / mesh_path
        mesh = import_mesh(mesh_path.read_text())
    else:
        raise ConfigError("[mesh] needs either structured_m or file")

    model = _build_model(parser)
    partition = _build_partition(parser, sorted(mesh.labels))

    if not parser.has_section("ensemble"):
        raise ConfigError("missing [ensemble] section")
    initials_raw = _require(parser, "ensemble", "initials")
    member_exprs = [item.strip() for item in initials_raw.split("|") if item.strip()]
    if not member_exprs:
        raise ConfigError("[ensemble] initials: no member expressions")

    source = None
    if parser.has_section("source") and parser.has_option("source", "expr"):
        source = _expr("source", "expr", parser.get("source", "expr"))

    members = []
    for text in member_exprs:
        init_fn = _expr("ensemble", "initials", text)
        members.append(
            MemberSpec(
                initial=(lambda x, y, fn=init_fn: fn(x, y, 0.0)),
                source=source,
            )
        )

    if not parser.has_section("time"):
        raise ConfigError("missing [time] section")
    dt = _getfloat(parser, "time", "dt")
    t_star = _getfloat(parser, "time", "t_star")
    snapshot_every = 1
    if parser.has_option("time", "snapshot_every"):
        try:
            snapshot_every = parser.getint("time", "snapshot_every")
        except ValueError:
            raise ConfigError("[time] snapshot_every: not an integer") from None

    output_dir = None
    write_snapshots = False
    if parser.has_section("output"):
        if parser.has_option("output", "dir"):
            output_dir = parser.get("output", "dir")
        if parser.has_option("output", "snapshots"):
            try:
                write_snapshots = parser.getboolean("output", "snapshots")
            except ValueError:
                raise ConfigError("[output] snapshots: not a boolean") from None

    try:
        scenario = Scenario(
            mesh=mesh,
            partition=partition,
            model=model,
            members=members,
            dt=dt,
            t_star=t_star,
            snapshot_every=snapshot_every,
            name=path.stem,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ScenarioConfig(scenario, output_dir, write_snapshots)
