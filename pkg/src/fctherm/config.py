"""Run configuration: a single JSON document describing probe, bath, and grids.

The schema is deliberately small and flat (see README for the full field
list).  Parsing is strict: unknown keys, missing required fields, and
out-of-domain values all raise :class:`ConfigError` with the dotted path of
the offending field, so a misconfigured batch job fails before any numerics
start.  Parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .models import (
    ContinuumBath,
    DiscreteBath,
    ProbeModel,
    load_operator_pair,
    probe_custom,
    probe_oscillator,
    probe_qubit,
    validate_pairing,
)
from .tolerances import DEFAULT_TOL, TOLERANCE_FIELDS, Tolerances

PROBE_KINDS = ("qubit", "oscillator", "custom-matrix-file")
BATH_KINDS = ("ohmic", "discrete-file")
SPACINGS = ("linear", "log")
SWEEP_AXES = ("gamma", "theta")


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _expect_number(value, path: str, positive: bool = False, nonnegative: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be > 0, got {value!r}")
    if nonnegative and v < 0:
        raise ConfigError(f"{path}: must be >= 0, got {value!r}")
    return v


def _expect_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {value}")
    return int(value)


def _expect_choice(value, path: str, choices: tuple[str, ...]) -> str:
    if value not in choices:
        raise ConfigError(f"{path}: expected one of {', '.join(choices)}; got {value!r}")
    return value


def _reject_unknown(mapping: dict, path: str, allowed: tuple[str, ...]) -> None:
    extra = sorted(set(mapping) - set(allowed))
    if extra:
        raise ConfigError(f"{path}: unknown field(s) {', '.join(extra)}")


@dataclass(frozen=True)
class GridSpec:
    """A one-dimensional parameter grid."""

    min: float
    max: float
    n: int
    spacing: str = "linear"

    def points(self) -> np.ndarray:
        if self.n == 1:
            return np.array([self.min])
        if self.spacing == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max), self.n)
        return np.linspace(self.min, self.max, self.n)


@dataclass(frozen=True)
class SweepSpec:
    """Second sweep axis: either an explicit value list or a grid."""

    axis: str
    values: tuple[float, ...] | None = None
    grid: GridSpec | None = None

    def points(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return self.grid.points()


@dataclass(frozen=True)
class ScalingSpec:
    """Coupling grid for order-of-scaling verification."""

    gamma_min: float = 1e-2
    gamma_max: float = 1e-1
    n: int = 8

    def points(self) -> np.ndarray:
        return np.logspace(math.log10(self.gamma_min), math.log10(self.gamma_max), self.n)


@dataclass(frozen=True)
class RunConfig:
    probe_kind: str
    probe_params: dict
    bath_kind: str
    bath_params: dict
    gamma: float
    beta_grid: GridSpec
    n_u: int = 64
    n_omega: int = 128
    tolerance_overrides: dict = field(default_factory=dict)
    output: str | None = None
    sweep: SweepSpec | None = None
    scaling: ScalingSpec | None = None
    base_dir: str | None = None  # directory the config was read from, for relative paths

    # -- materialisation ----------------------------------------------------

    def tolerances(self) -> Tolerances:
        return DEFAULT_TOL.replaced(**self.tolerance_overrides)

    def _resolve(self, path: str) -> str:
        p = Path(path)
        if not p.is_absolute() and self.base_dir:
            p = Path(self.base_dir) / p
        return str(p)

    def build_probe(self, beta: float | None = None, theta: float | None = None) -> ProbeModel:
        """Instantiate the probe, possibly specialised to a grid point.

        ``beta`` sizes the oscillator truncation when none was pinned in the
        config; ``theta`` overrides the qubit coupling angle during sweeps.
        """
        params = dict(self.probe_params)
        if self.probe_kind == "qubit":
            if theta is not None:
                params["theta"] = theta
            return probe_qubit(params.get("epsilon", 1.0), params.get("theta", 0.0))
        if self.probe_kind == "oscillator":
            return probe_oscillator(
                params.get("omega0", 1.0),
                n_trunc=params.get("n_trunc"),
                beta_design=params.get("beta_design", beta),
            )
        h, s, mu = load_operator_pair(self._resolve(params["path"]))
        return probe_custom(h, s, dim_exponent=mu)

    def build_bath(self):
        if self.bath_kind == "ohmic":
            probe = self.build_probe(beta=1.0)
            a = self.bath_params.get("a")
            if a is None:
                a = 1.0 - 2.0 * probe.dim_exponent if probe.dim_exponent is not None else 1.0
            bath = ContinuumBath(
                s=self.bath_params["s"], cutoff=self.bath_params["Omega"], dim_exponent=a
            )
            validate_pairing(probe, bath)
            return bath
        h, b, _ = load_operator_pair(self._resolve(self.bath_params["path"]))
        return DiscreteBath(h, b, label=Path(self.bath_params["path"]).stem)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        out: dict = {
            "probe": {"kind": self.probe_kind, "params": dict(self.probe_params)},
            "bath": {"kind": self.bath_kind, **dict(self.bath_params)},
            "gamma": self.gamma,
            "beta_grid": {
                "min": self.beta_grid.min,
                "max": self.beta_grid.max,
                "n": self.beta_grid.n,
                "spacing": self.beta_grid.spacing,
            },
            "quadrature": {"n_u": self.n_u, "n_omega": self.n_omega},
        }
        if self.tolerance_overrides:
            out["tolerances"] = dict(self.tolerance_overrides)
        if self.output is not None:
            out["output"] = self.output
        if self.sweep is not None:
            sw: dict = {"axis": self.sweep.axis}
            if self.sweep.values is not None:
                sw["values"] = list(self.sweep.values)
            else:
                g = self.sweep.grid
                sw.update({"min": g.min, "max": g.max, "n": g.n, "spacing": g.spacing})
            out["sweep"] = sw
        if self.scaling is not None:
            out["scaling"] = {
                "gamma_min": self.scaling.gamma_min,
                "gamma_max": self.scaling.gamma_max,
                "n": self.scaling.n,
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _parse_grid(raw, path: str, positive_min: bool) -> GridSpec:
    raw = _expect_mapping(raw, path)
    _reject_unknown(raw, path, ("min", "max", "n", "spacing"))
    for key in ("min", "max", "n"):
        if key not in raw:
            raise ConfigError(f"{path}.{key}: required")
    spacing = _expect_choice(raw.get("spacing", "linear"), f"{path}.spacing", SPACINGS)
    lo = _expect_number(raw["min"], f"{path}.min", positive=(spacing == "log") or positive_min)
    hi = _expect_number(raw["max"], f"{path}.max", positive=(spacing == "log") or positive_min)
    n = _expect_int(raw["n"], f"{path}.n", minimum=1)
    if hi < lo:
        raise ConfigError(f"{path}: max must be >= min")
    if n > 1 and hi == lo:
        raise ConfigError(f"{path}: max must exceed min for n > 1")
    return GridSpec(min=lo, max=hi, n=n, spacing=spacing)


def _parse_probe(raw) -> tuple[str, dict]:
    raw = _expect_mapping(raw, "probe")
    _reject_unknown(raw, "probe", ("kind", "params"))
    kind = _expect_choice(raw.get("kind"), "probe.kind", PROBE_KINDS)
    params = _expect_mapping(raw.get("params", {}), "probe.params")
    if kind == "qubit":
        _reject_unknown(params, "probe.params", ("epsilon", "theta"))
        if "epsilon" in params:
            _expect_number(params["epsilon"], "probe.params.epsilon", positive=True)
        if "theta" in params:
            _expect_number(params["theta"], "probe.params.theta")
    elif kind == "oscillator":
        _reject_unknown(params, "probe.params", ("omega0", "n_trunc", "beta_design"))
        if "omega0" in params:
            _expect_number(params["omega0"], "probe.params.omega0", positive=True)
        if "n_trunc" in params and params["n_trunc"] is not None:
            _expect_int(params["n_trunc"], "probe.params.n_trunc", minimum=2)
        if "beta_design" in params:
            _expect_number(params["beta_design"], "probe.params.beta_design", positive=True)
    else:
        _reject_unknown(params, "probe.params", ("path",))
        if "path" not in params:
            raise ConfigError("probe.params.path: required for custom-matrix-file")
    return kind, dict(params)


def _parse_bath(raw) -> tuple[str, dict]:
    raw = _expect_mapping(raw, "bath")
    kind = _expect_choice(raw.get("kind"), "bath.kind", BATH_KINDS)
    if kind == "ohmic":
        _reject_unknown(raw, "bath", ("kind", "s", "Omega", "a"))
        for key in ("s", "Omega"):
            if key not in raw:
                raise ConfigError(f"bath.{key}: required for an ohmic-family bath")
        params = {
            "s": _expect_number(raw["s"], "bath.s", positive=True),
            "Omega": _expect_number(raw["Omega"], "bath.Omega", positive=True),
        }
        if "a" in raw:
            params["a"] = _expect_number(raw["a"], "bath.a")
        return kind, params
    _reject_unknown(raw, "bath", ("kind", "path"))
    if "path" not in raw:
        raise ConfigError("bath.path: required for a discrete-file bath")
    return kind, {"path": raw["path"]}


def parse_config(raw: dict, base_dir: str | None = None) -> RunConfig:
    """Validate a decoded JSON document and return a RunConfig."""
    raw = _expect_mapping(raw, "config")
    _reject_unknown(
        raw,
        "config",
        (
            "probe",
            "bath",
            "gamma",
            "beta_grid",
            "quadrature",
            "tolerances",
            "output",
            "sweep",
            "scaling",
        ),
    )
    for key in ("probe", "bath", "gamma", "beta_grid"):
        if key not in raw:
            raise ConfigError(f"{key}: required")
    probe_kind, probe_params = _parse_probe(raw["probe"])
    bath_kind, bath_params = _parse_bath(raw["bath"])
    gamma = _expect_number(raw["gamma"], "gamma", nonnegative=True)
    beta_grid = _parse_grid(raw["beta_grid"], "beta_grid", positive_min=True)

    quad = _expect_mapping(raw.get("quadrature", {}), "quadrature")
    _reject_unknown(quad, "quadrature", ("n_u", "n_omega"))
    n_u = _expect_int(quad.get("n_u", 64), "quadrature.n_u", minimum=1)
    n_omega = _expect_int(quad.get("n_omega", 128), "quadrature.n_omega", minimum=1)

    overrides = _expect_mapping(raw.get("tolerances", {}), "tolerances")
    for key, value in overrides.items():
        if key not in TOLERANCE_FIELDS:
            raise ConfigError(f"tolerances.{key}: unknown tolerance name")
        _expect_number(value, f"tolerances.{key}")

    output = raw.get("output")
    if output is not None and not isinstance(output, str):
        raise ConfigError(f"output: expected a path string, got {output!r}")

    sweep = None
    if "sweep" in raw:
        sw = _expect_mapping(raw["sweep"], "sweep")
        axis = _expect_choice(sw.get("axis"), "sweep.axis", SWEEP_AXES)
        if axis == "theta" and probe_kind != "qubit":
            raise ConfigError("sweep.axis: theta sweeps require a qubit probe")
        if "values" in sw:
            _reject_unknown(sw, "sweep", ("axis", "values"))
            vals = sw["values"]
            if not isinstance(vals, list) or not vals:
                raise ConfigError("sweep.values: expected a non-empty list")
            values = tuple(
                _expect_number(v, f"sweep.values[{i}]", nonnegative=(axis == "gamma"))
                for i, v in enumerate(vals)
            )
            sweep = SweepSpec(axis=axis, values=values)
        else:
            _reject_unknown(sw, "sweep", ("axis", "min", "max", "n", "spacing"))
            grid_raw = {k: v for k, v in sw.items() if k != "axis"}
            grid = _parse_grid(grid_raw, "sweep", positive_min=(axis == "gamma"))
            sweep = SweepSpec(axis=axis, grid=grid)

    scaling = None
    if "scaling" in raw:
        sc = _expect_mapping(raw["scaling"], "scaling")
        _reject_unknown(sc, "scaling", ("gamma_min", "gamma_max", "n"))
        scaling = ScalingSpec(
            gamma_min=_expect_number(sc.get("gamma_min", 1e-2), "scaling.gamma_min", positive=True),
            gamma_max=_expect_number(sc.get("gamma_max", 1e-1), "scaling.gamma_max", positive=True),
            n=_expect_int(sc.get("n", 8), "scaling.n", minimum=5),
        )
        if scaling.gamma_max <= scaling.gamma_min:
            raise ConfigError("scaling: gamma_max must exceed gamma_min")

    cfg = RunConfig(
        probe_kind=probe_kind,
        probe_params=probe_params,
        bath_kind=bath_kind,
        bath_params=bath_params,
        gamma=gamma,
        beta_grid=beta_grid,
        n_u=n_u,
        n_omega=n_omega,
        tolerance_overrides=dict(overrides),
        output=output,
        sweep=sweep,
        scaling=scaling,
        base_dir=base_dir,
    )
    # materialisation errors (bad matrix files, dimension mismatches) should
    # surface as configuration problems, not numerical ones
    try:
        cfg.tolerances()
        cfg.build_probe(beta=1.0)
        cfg.build_bath()
    except ConfigError:
        raise
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"config: failed to materialise model: {exc}") from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config: cannot read {p}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {p}: {exc}") from exc
    return parse_config(raw, base_dir=str(p.parent))
