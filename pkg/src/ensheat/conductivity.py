"""Temperature-dependent thermal conductivity models with declared bounds.

Every model declares admissibility bounds ``0 < kappa_min <= kappa_max`` and
evaluation clamps into that interval; out-of-bound evaluations are counted by
the callers (see :func:`clamped_with_count`) rather than treated as fatal, so
a drifting simulation keeps producing diagnostics instead of aborting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConductivityModel",
    "kappa_eval",
    "kappa_prime_field",
    "clamped_with_count",
]

_KINDS = ("exponential", "heaviside_quadratic", "linear", "constant", "tabulated")


@dataclass(frozen=True)
class ConductivityModel:
    """Evaluable conductivity kappa(T) with declared bounds.

    ``c_kappa`` is an (informational) Lipschitz constant carried as metadata;
    it does not enter any computation.  Use the classmethod constructors
    rather than instantiating directly.
    """

    kind: str
    params: tuple
    kappa_min: float
    kappa_max: float
    c_kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown conductivity kind: {self.kind!r}")
        if not (0.0 < self.kappa_min <= self.kappa_max < np.inf):
            raise ValueError("bounds must satisfy 0 < kappa_min <= kappa_max")
        if self.c_kappa < 0.0:
            raise ValueError("c_kappa must be nonnegative")
        if self.kind == "tabulated":
            temps, values = self.params
            if np.any(np.diff(temps) <= 0.0):
                raise ValueError("tabulated temperatures must be strictly increasing")
            if np.any(values < self.kappa_min) or np.any(values > self.kappa_max):
                raise ValueError("tabulated values must lie within the declared bounds")

    @classmethod
    def exponential(cls, c, kappa_min, kappa_max, c_kappa=0.0):
        """kappa(T) = exp(c*T)."""
        return cls("exponential", (float(c),), kappa_min, kappa_max, c_kappa)

    @classmethod
    def heaviside_quadratic(cls, a, t_c, base, kappa_min, kappa_max, c_kappa=0.0):
        """kappa(T) = a*(T - t_c)^2 * H(t_c - T) + base, with H the unit step."""
        return cls(
            "heaviside_quadratic",
            (float(a), float(t_c), float(base)),
            kappa_min,
            kappa_max,
            c_kappa,
        )

    @classmethod
    def linear(cls, slope, kappa_min, kappa_max, c_kappa=0.0):
        """kappa(T) = slope*T."""
        return cls("linear", (float(slope),), kappa_min, kappa_max, c_kappa)

    @classmethod
    def constant(cls, value, kappa_min=None, kappa_max=None, c_kappa=0.0):
        """kappa(T) = value; bounds default to the value itself."""
        value = float(value)
        lo = value if kappa_min is None else kappa_min
        hi = value if kappa_max is None else kappa_max
        return cls("constant", (value,), lo, hi, c_kappa)

    @classmethod
    def tabulated(cls, points, kappa_min, kappa_max, c_kappa=0.0):
        """Piecewise-linear interpolation of sorted (T, kappa) pairs."""
        pts = sorted((float(t), float(k)) for t, k in points)
        temps = np.array([p[0] for p in pts])
        values = np.array([p[1] for p in pts])
        temps.flags.writeable = False
        values.flags.writeable = False
        return cls("tabulated", (temps, values), kappa_min, kappa_max, c_kappa)

    def raw(self, temperature):
        """Unclamped kappa(T); vectorized over numpy arrays."""
        T = np.asarray(temperature, dtype=np.float64)
        if self.kind == "exponential":
            (c,) = self.params
            return np.exp(c * T)
        if self.kind == "heaviside_quadratic":
            a, t_c, base = self.params
            dT = T - t_c
            return np.where(t_c - T >= 0.0, a * dT * dT, 0.0) + base
        if self.kind == "linear":
            (slope,) = self.params
            return slope * T
        if self.kind == "constant":
            (value,) = self.params
            return np.full_like(T, value)
        temps, values = self.params
        return np.interp(T, temps, values)


def kappa_eval(model: ConductivityModel, temperature):
    """Clamped conductivity kappa(T) in [kappa_min, kappa_max]."""
    raw = model.raw(temperature)
    clamped = np.clip(raw, model.kappa_min, model.kappa_max)
    if np.isscalar(temperature):
        return float(clamped)
    return clamped


def kappa_prime_field(model: ConductivityModel, temperature):
    """Conductivity fluctuation kappa_max - kappa(T); nonnegative by clamping."""
    value = model.kappa_max - kappa_eval(model, temperature)
    if np.isscalar(temperature):
        return float(value)
    return value


def clamped_with_count(model: ConductivityModel, temperatures: np.ndarray):
    """Clamped kappa over an array plus the number of bound violations."""
    raw = model.raw(temperatures)
    violations = int(np.count_nonzero((raw < model.kappa_min) | (raw > model.kappa_max)))
    return np.clip(raw, model.kappa_min, model.kappa_max), violations
