"""Config parsing: strict validation, round-trip identity, materialisation."""

from __future__ import annotations

import json

import numpy as np
import pytest

from fctherm import ConfigError, GridSpec, load_config, parse_config

BASE = {
    "probe": {"kind": "qubit", "params": {"epsilon": 1.0, "theta": 0.5}},
    "bath": {"kind": "ohmic", "s": 1.0, "Omega": 100.0},
    "gamma": 0.1,
    "beta_grid": {"min": 0.5, "max": 2.0, "n": 3},
}


def cfg_with(**patch) -> dict:
    doc = json.loads(json.dumps(BASE))
    doc.update(patch)
    return doc


# ---------------------------------------------------------------------------
# validation errors carry the dotted path of the offending field
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda d: d.pop("probe"), "probe: required"),
        (lambda d: d.pop("gamma"), "gamma: required"),
        (lambda d: d.update(gamma=-0.1), "gamma: must be >= 0"),
        (lambda d: d.update(extra=1), "config: unknown field"),
        (lambda d: d["probe"].update(kind="spin-7"), "probe.kind"),
        (lambda d: d["probe"]["params"].update(epsilon=0.0), "probe.params.epsilon"),
        (lambda d: d["probe"]["params"].update(zeta=2), "probe.params: unknown field"),
        (lambda d: d["bath"].pop("s"), "bath.s: required for an ohmic-family bath"),
        (lambda d: d["bath"].update(Omega=-1.0), "bath.Omega"),
        (lambda d: d["beta_grid"].pop("n"), "beta_grid.n: required"),
        (lambda d: d["beta_grid"].update(n=0), "beta_grid.n: must be >= 1"),
        (lambda d: d["beta_grid"].update(min=5.0), "beta_grid: max must be >= min"),
        (lambda d: d["beta_grid"].update(spacing="cubic"), "beta_grid.spacing"),
        (lambda d: d.update(quadrature={"n_u": 0}), "quadrature.n_u"),
        (lambda d: d.update(tolerances={"bogus": 1e-9}), "tolerances.bogus: unknown tolerance name"),
        (lambda d: d.update(tolerances={"kms": "tight"}), "tolerances.kms"),
        (lambda d: d.update(output=7), "output: expected a path string"),
        (lambda d: d.update(sweep={"axis": "phi", "values": [1.0]}), "sweep.axis"),
        (lambda d: d.update(sweep={"axis": "gamma", "values": []}), "sweep.values"),
        (lambda d: d.update(sweep={"axis": "gamma", "values": [0.1, -0.2]}), "sweep.values[1]"),
        (lambda d: d.update(scaling={"n": 4}), "scaling.n: must be >= 5"),
        (
            lambda d: d.update(scaling={"gamma_min": 0.1, "gamma_max": 0.1}),
            "scaling: gamma_max must exceed gamma_min",
        ),
    ],
)
def test_parse_errors_name_the_field(mutate, fragment):
    doc = cfg_with()
    mutate(doc)
    with pytest.raises(ConfigError) as err:
        parse_config(doc)
    assert fragment in str(err.value), str(err.value)


def test_theta_sweep_requires_qubit_probe():
    doc = cfg_with(
        probe={"kind": "oscillator", "params": {"omega0": 1.0}},
        bath={"kind": "ohmic", "s": 1.0, "Omega": 100.0, "a": 2.0},
        sweep={"axis": "theta", "values": [0.1, 0.2]},
    )
    with pytest.raises(ConfigError, match="theta sweeps require a qubit probe"):
        parse_config(doc)


# ---------------------------------------------------------------------------
# round trips and grids
# ---------------------------------------------------------------------------


def test_parse_serialize_parse_is_identity():
    doc = cfg_with(
        quadrature={"n_u": 32, "n_omega": 96},
        tolerances={"kms": 1e-9},
        output="out.csv",
        sweep={"axis": "gamma", "min": 0.01, "max": 0.1, "n": 4, "spacing": "log"},
        scaling={"gamma_min": 0.02, "gamma_max": 0.2, "n": 6},
    )
    cfg = parse_config(doc)
    again = parse_config(json.loads(cfg.to_json()))
    assert again.to_json() == cfg.to_json()
    assert again.probe_params == cfg.probe_params
    assert again.sweep == cfg.sweep
    assert again.scaling == cfg.scaling


def test_grid_points_spacings():
    lin = GridSpec(0.0, 1.0, 5).points()
    assert np.allclose(lin, [0.0, 0.25, 0.5, 0.75, 1.0])
    log = GridSpec(0.1, 10.0, 3, "log").points()
    assert np.allclose(log, [0.1, 1.0, 10.0])
    single = GridSpec(0.7, 0.7, 1).points()
    assert single.tolist() == [0.7]


def test_sweep_points_from_values_and_grid():
    cfg = parse_config(cfg_with(sweep={"axis": "theta", "values": [0.3, 1.2]}))
    assert cfg.sweep.points().tolist() == [0.3, 1.2]
    cfg = parse_config(
        cfg_with(sweep={"axis": "gamma", "min": 0.01, "max": 0.04, "n": 3, "spacing": "linear"})
    )
    assert np.allclose(cfg.sweep.points(), [0.01, 0.025, 0.04])


def test_scaling_defaults():
    cfg = parse_config(cfg_with(scaling={}))
    pts = cfg.scaling.points()
    assert pts.size == 8
    assert pts[0] == pytest.approx(1e-2) and pts[-1] == pytest.approx(1e-1)


# ---------------------------------------------------------------------------
# materialisation
# ---------------------------------------------------------------------------


def test_build_probe_theta_override():
    cfg = parse_config(cfg_with())
    p = cfg.build_probe()
    assert p.params["theta"] == 0.5
    p2 = cfg.build_probe(theta=1.5)
    assert p2.params["theta"] == 1.5


def test_build_oscillator_sizes_truncation_from_beta():
    doc = cfg_with(
        probe={"kind": "oscillator", "params": {"omega0": 1.0}},
        bath={"kind": "ohmic", "s": 1.0, "Omega": 100.0, "a": 2.0},
    )
    cfg = parse_config(doc)
    cold = cfg.build_probe(beta=2.0)
    colder = cfg.build_probe(beta=0.2)
    assert colder.dim > cold.dim  # warmer target needs more levels


def test_ohmic_exponent_defaults_from_probe_dimension():
    qubit_cfg = parse_config(cfg_with())
    assert qubit_cfg.build_bath().dim_exponent == 1.0
    osc_cfg = parse_config(
        cfg_with(probe={"kind": "oscillator", "params": {"omega0": 1.0}})
    )
    assert osc_cfg.build_bath().dim_exponent == 2.0


def test_mismatched_exponent_is_a_config_error():
    doc = cfg_with(bath={"kind": "ohmic", "s": 1.0, "Omega": 100.0, "a": 2.0})
    with pytest.raises(ConfigError, match="failed to materialise"):
        parse_config(doc)


def test_tolerance_overrides_apply():
    cfg = parse_config(cfg_with(tolerances={"kms": 1e-9, "fd_step_rel": 1e-4}))
    tol = cfg.tolerances()
    assert tol.kms == 1e-9 and tol.fd_step_rel == 1e-4


def test_discrete_file_bath_with_relative_path(tmp_path, config_dir):
    doc = cfg_with(bath={"kind": "discrete-file", "path": "bath_qubit_x.json"})
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    # relative bath paths resolve against the config's own directory, so a
    # copy of the operator file must sit next to the config
    (tmp_path / "bath_qubit_x.json").write_text(
        (config_dir / "bath_qubit_x.json").read_text()
    )
    cfg = load_config(path)
    bath = cfg.build_bath()
    assert bath.hamiltonian.shape == (2, 2)
    assert bath.label == "bath_qubit_x"


def test_custom_probe_from_file(tmp_path, config_dir):
    doc = cfg_with(
        probe={"kind": "custom-matrix-file", "params": {"path": "probe_qubit_z.json"}},
        bath={"kind": "ohmic", "s": 1.0, "Omega": 100.0},
    )
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    (tmp_path / "probe_qubit_z.json").write_text(
        (config_dir / "probe_qubit_z.json").read_text()
    )
    cfg = load_config(path)
    probe = cfg.build_probe()
    assert probe.kind == "custom"
    assert probe.dim == 2


def test_load_config_wraps_io_and_json_errors(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


def test_missing_matrix_file_is_a_config_error(tmp_path):
    doc = cfg_with(bath={"kind": "discrete-file", "path": "nowhere.json"})
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError, match="failed to materialise"):
        load_config(path)
