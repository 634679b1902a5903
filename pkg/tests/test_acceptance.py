"""Acceptance matrix: one test per numbered criterion.

Criteria 1, 3 and 7 pin closed-form targets that the exact small-system
reference does not reproduce; those tests are left failing on purpose, each
with a passing companion that checks the same extraction against the value
rederived from the model itself.  See the README for the full analysis.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from fctherm import (
    ContinuumBath,
    JointModel,
    OscillatorCorrelation,
    bath_correlation,
    bath_mode,
    bath_qubit,
    cfi_energy_perturbative,
    default_gamma_grid,
    exact_fishers,
    exact_mfg,
    exact_sld,
    high_T_asymptote,
    high_T_asymptote_rederived,
    order_fit,
    pauli_coefficient,
    probe_correlation,
    probe_oscillator,
    probe_qubit,
    qfi_perturbative_integral,
    qfi_perturbative_sum,
    reference_two_qubit_models,
    refine_linear,
    refine_quadratic,
    sld_second_order,
    x_matrix,
    x_matrix_fd_dbeta,
    xi_via_spectral_kernel,
)
from fctherm.cli import CSV_COLUMNS, main

BETAS_REFERENCE = (0.5, 1.0, 2.0)


# ---------------------------------------------------------------------------
# coefficient extraction from the exact reference (criterion 1 machinery)
# ---------------------------------------------------------------------------


def extract_state_linear(model, beta: float) -> float:
    axis = model.coherence_axis

    def fn(g: float) -> float:
        return pauli_coefficient(exact_mfg(model.joint(g), beta).matrix, axis)

    return refine_linear(fn)


def extract_state_quadratic(model, beta: float) -> float:
    def fn(g: float) -> float:
        return pauli_coefficient(exact_mfg(model.joint(g), beta).matrix, "z")

    return refine_quadratic(fn)


def extract_sld_linear(model, beta: float) -> float:
    if model.name == "dephasing":
        # commuting coupling: the linear response sits on the excited diagonal
        def fn(g: float) -> float:
            return float(np.real(exact_sld(model.joint(g), beta)[0, 0]))

    else:
        def fn(g: float) -> float:
            return pauli_coefficient(exact_sld(model.joint(g), beta), model.coherence_axis)

    return refine_linear(fn)


def extract_qfi_linear(model, beta: float) -> float:
    def fn(g: float) -> float:
        return exact_fishers(model.joint(g), beta)[0]

    return refine_linear(fn)


def extract_fi_gap_quadratic(model, beta: float) -> float:
    def fn(g: float) -> float:
        f, i = exact_fishers(model.joint(g), beta)
        return f - i

    return refine_quadratic(fn)


def assert_close(got: float, want: float, rel: float, label: str) -> None:
    dev = abs(got - want) / max(abs(want), 1e-300)
    assert dev <= rel, f"{label}: extracted {got:.8f} vs target {want:.8f} (rel dev {dev:.4f})"


def test_criterion_1_reference_model_closed_forms():
    t0 = time.perf_counter()
    models = reference_two_qubit_models()
    checks = []
    for beta in BETAS_REFERENCE:
        for name in ("dephasing", "dissipative"):
            model = models[name]
            c = model.coeffs(beta)
            checks.append(
                (extract_state_linear(model, beta), c["state_linear"],
                 f"{name} state linear coefficient at beta={beta}")
            )
            checks.append(
                (extract_state_quadratic(model, beta), c["state_quadratic"],
                 f"{name} state quadratic coefficient at beta={beta}")
            )
            if name == "dephasing":
                checks.append(
                    (extract_sld_linear(model, beta), c["sld_linear"],
                     f"{name} sld linear coefficient at beta={beta}")
                )
                checks.append(
                    (extract_qfi_linear(model, beta), c["qfi_linear"],
                     f"{name} qfi linear coefficient at beta={beta}")
                )
            else:
                checks.append(
                    (extract_sld_linear(model, beta), c["sld_linear_target"],
                     f"{name} sld linear coefficient at beta={beta}")
                )
                checks.append(
                    (extract_fi_gap_quadratic(model, beta), c["fi_gap_quadratic_target"],
                     f"{name} fisher-gap quadratic coefficient at beta={beta}")
                )
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"extraction took {elapsed:.2f} s (budget 1 s)"
    failures = []
    for got, want, label in checks:
        dev = abs(got - want) / max(abs(want), 1e-300)
        if dev > 0.01:
            failures.append(f"{label}: extracted {got:.8f} vs target {want:.8f} (rel dev {dev:.4f})")
    assert not failures, "pinned-coefficient mismatches:\n" + "\n".join(failures)


def test_criterion_1_companion_dissipative_rederived_forms():
    # same extractions as the pinned check above, compared against the
    # coefficients rederived from the model instead of the pinned targets
    model = reference_two_qubit_models()["dissipative"]
    for beta in BETAS_REFERENCE:
        c = model.coeffs(beta)
        assert_close(
            extract_sld_linear(model, beta), c["sld_linear_derived"], 0.01,
            f"dissipative sld linear (rederived) at beta={beta}",
        )
        assert_close(
            extract_fi_gap_quadratic(model, beta), c["fi_gap_quadratic_derived"], 0.01,
            f"dissipative fisher-gap quadratic (rederived) at beta={beta}",
        )


# ---------------------------------------------------------------------------
# coupling-order scalings against the exact reference (criteria 2-4)
# ---------------------------------------------------------------------------


def test_criterion_2_fisher_gap_scales_at_fourth_order():
    t0 = time.perf_counter()
    probe, bath = probe_qubit(1.0, math.pi / 4.0), bath_qubit(1.0)
    beta = 1.0
    gammas = default_gamma_grid()
    f_vals, gaps = [], []
    for g in gammas:
        f, i = exact_fishers(JointModel(probe, bath, float(g)), beta)
        f_vals.append(f)
        gaps.append(abs(f - i))
    fit = order_fit(gammas, gaps, scale=max(f_vals))
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f} s (budget 5 s)"
    assert not fit.indistinguishable
    assert 3.8 <= fit.slope <= 4.2, f"F - I slope {fit.slope:.4f} outside [3.8, 4.2]"


def test_criterion_3_first_order_gap_without_zero_mean():
    t0 = time.perf_counter()
    model = reference_two_qubit_models()["dissipative"]
    beta = 1.0
    gammas = default_gamma_grid()
    f_vals, gaps = [], []
    for g in gammas:
        f, i = exact_fishers(model.joint(float(g)), beta)
        f_vals.append(f)
        gaps.append(abs(f - i))
    fit = order_fit(gammas, gaps, scale=max(f_vals))
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f} s (budget 5 s)"
    assert 1.9 <= fit.slope <= 2.1, f"F - I slope {fit.slope:.4f} outside [1.9, 2.1]"
    pinned = 0.25 / math.cosh(beta) ** 4 * (1.0 - 2.0 * math.tanh(beta)) ** 2
    assert_close(
        fit.coefficient, pinned, 0.05,
        f"dissipative fisher-gap leading coefficient at beta={beta}",
    )


def test_criterion_3_companion_gap_coefficient_rederived():
    model = reference_two_qubit_models()["dissipative"]
    beta = 1.0
    gammas = default_gamma_grid()
    f_vals, gaps = [], []
    for g in gammas:
        f, i = exact_fishers(model.joint(float(g)), beta)
        f_vals.append(f)
        gaps.append(abs(f - i))
    fit = order_fit(gammas, gaps, scale=max(f_vals))
    derived = model.coeffs(beta)["fi_gap_quadratic_derived"]
    assert_close(
        fit.coefficient, derived, 0.05,
        f"dissipative fisher-gap leading coefficient (rederived) at beta={beta}",
    )


def test_criterion_4_perturbative_truncation_is_fourth_order():
    t0 = time.perf_counter()
    probe, bath = probe_qubit(1.0, math.pi / 4.0), bath_qubit(1.0)
    beta = 1.0
    f0, f2 = qfi_perturbative_integral(probe, bath, beta)
    gammas = default_gamma_grid()
    f_vals, trunc = [], []
    for g in gammas:
        f, _ = exact_fishers(JointModel(probe, bath, float(g)), beta)
        f_vals.append(f)
        trunc.append(abs(f - (f0 + g**2 * f2)))
    fit = order_fit(gammas, trunc, scale=max(f_vals))
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"took {elapsed:.2f} s (budget 5 s)"
    assert 3.8 <= fit.slope <= 4.2, f"|F - F_pert| slope {fit.slope:.4f} outside [3.8, 4.2]"


# ---------------------------------------------------------------------------
# route identities (criteria 5-6)
# ---------------------------------------------------------------------------


def builtin_model_pairs(beta: float):
    return [
        ("qubit theta=0 / power-law bath", probe_qubit(1.0, 0.0), ContinuumBath(1.0, 100.0)),
        ("qubit theta=pi/4 / power-law bath", probe_qubit(1.0, math.pi / 4.0), ContinuumBath(1.0, 100.0)),
        ("qubit theta=3pi/2 / power-law bath", probe_qubit(1.0, 1.5 * math.pi), ContinuumBath(1.0, 100.0)),
        ("qubit theta=pi/4 / two-level bath", probe_qubit(1.0, math.pi / 4.0), bath_qubit(1.0)),
        ("oscillator / power-law bath", probe_oscillator(1.0, beta_design=beta),
         ContinuumBath(1.0, 100.0, dim_exponent=2.0)),
        ("oscillator / single-mode bath", probe_oscillator(1.0, beta_design=beta), bath_mode(1.0, 20)),
    ]


def test_criterion_5_integral_and_sum_routes_agree():
    for beta in BETAS_REFERENCE:
        for label, probe, bath in builtin_model_pairs(beta):
            f0_a, f2_int = qfi_perturbative_integral(probe, bath, beta)
            f0_b, f2_sum = qfi_perturbative_sum(probe, bath, beta)
            _, i2 = cfi_energy_perturbative(probe, bath, beta)
            assert f0_a == f0_b
            # relative agreement with an absolute floor: a commuting probe
            # makes both routes identically zero up to rounding
            diff = abs(f2_int - f2_sum)
            floor = max(1e-7 * max(abs(f2_int), abs(f2_sum)), 1e-12)
            assert diff <= floor, (
                f"{label} at beta={beta}: integral route {f2_int!r} vs sum route "
                f"{f2_sum!r} differ by {diff:.3e}"
            )
            assert abs(i2 - f2_sum) <= 1e-14 * max(1.0, abs(f2_sum)), (
                f"{label} at beta={beta}: energy-measurement coefficient {i2!r} "
                f"deviates from sum-route {f2_sum!r}"
            )


def test_criterion_6_kernel_route_and_sign():
    probe = probe_qubit(1.0, 1.5 * math.pi)
    bath = ContinuumBath(1.0, 100.0)
    for beta in np.logspace(math.log10(0.05), math.log10(5.0), 9):
        beta = float(beta)
        _, f2 = qfi_perturbative_integral(probe, bath, beta)
        xi_direct = beta**2 * f2
        xi_kernel = xi_via_spectral_kernel(probe, bath, beta)
        assert abs(xi_kernel - xi_direct) <= 1e-6 * abs(xi_direct), (
            f"beta={beta:.4g}: kernel route {xi_kernel!r} vs direct {xi_direct!r}"
        )
        assert xi_kernel < 0.0, f"beta={beta:.4g}: xi = {xi_kernel!r} is not negative"


# ---------------------------------------------------------------------------
# high-temperature asymptotics (criterion 7)
# ---------------------------------------------------------------------------


def high_T_cases():
    beta = 0.01
    qubit = probe_qubit(1.0, 1.5 * math.pi)
    qubit_bath = ContinuumBath(1.0, 1.0)
    qubit_xi = xi_via_spectral_kernel(
        qubit, qubit_bath, beta, probe_corr=probe_correlation(qubit, beta, "closed")
    )
    osc = probe_oscillator(1.0, n_trunc=40)
    osc_bath = ContinuumBath(1.0, 1.0, dim_exponent=2.0)
    osc_xi = xi_via_spectral_kernel(
        osc, osc_bath, beta, probe_corr=OscillatorCorrelation(1.0, beta)
    )
    return beta, [("qubit", qubit, qubit_bath, qubit_xi), ("oscillator", osc, osc_bath, osc_xi)]


def test_criterion_7_high_temperature_asymptote():
    beta, cases = high_T_cases()
    for label, probe, bath, xi in cases:
        target = high_T_asymptote(probe, bath, beta)
        assert_close(xi, target, 0.02, f"{label} xi at beta={beta} vs pinned asymptote")


def test_criterion_7_companion_rederived_asymptote():
    beta, cases = high_T_cases()
    for label, probe, bath, xi in cases:
        target = high_T_asymptote_rederived(probe, bath, beta)
        assert_close(xi, target, 0.02, f"{label} xi at beta={beta} vs rederived asymptote")


# ---------------------------------------------------------------------------
# property suites (criterion 8)
# ---------------------------------------------------------------------------


def test_criterion_8_property_suites():
    t0 = time.perf_counter()

    # (a) thermal reflection symmetry of every correlator family
    beta = 1.7
    correlators = [
        ("qubit closed form", probe_correlation(probe_qubit(1.0, 0.9), beta, "closed")),
        ("qubit level sum", probe_correlation(probe_qubit(1.0, 2.0), beta)),
        ("oscillator closed form", OscillatorCorrelation(1.2, beta)),
        ("two-level bath", bath_correlation(bath_qubit(0.7), beta)),
        ("single-mode bath", bath_correlation(bath_mode(1.0, 25), beta)),
        ("power-law bath", bath_correlation(ContinuumBath(1.0, 50.0), beta)),
    ]
    u = np.linspace(0.0, beta, 11)
    for label, corr in correlators:
        drift = np.max(np.abs(corr.value(u) - corr.value(beta - u)))
        scale = max(1.0, float(np.max(np.abs(corr.value(u)))))
        assert drift <= 1e-10 * scale, f"reflection drift {drift:.3e} for {label}"

    pairs = [
        ("qubit / two-level bath", probe_qubit(1.0, math.pi / 4.0), bath_qubit(1.0)),
        ("qubit / power-law bath", probe_qubit(1.0, 1.5 * math.pi), ContinuumBath(1.0, 100.0)),
        ("qubit / single-mode bath", probe_qubit(0.7, 0.3), bath_mode(1.0, 25)),
    ]

    for beta in (0.5, 2.0):
        all_pairs = pairs + [
            ("oscillator / power-law bath", probe_oscillator(1.0, beta_design=beta),
             ContinuumBath(1.0, 100.0, dim_exponent=2.0)),
        ]
        for label, probe, bath in all_pairs:
            exp = x_matrix(probe, bath, beta)
            scale = max(1.0, float(np.max(np.abs(exp.weighted_x()))))
            # (b) population-weighted correction is traceless
            assert abs(exp.trace_identity()) <= 1e-10 * scale, (
                f"{label} at beta={beta}: tr(pi X) = {exp.trace_identity():.3e}"
            )
            # (c) analytic beta-derivative matches finite differences
            fd = x_matrix_fd_dbeta(probe, bath, beta)
            fd_scale = max(1.0, float(np.max(np.abs(fd))))
            dev = float(np.max(np.abs(exp.x_dbeta - fd)))
            assert dev <= 1e-6 * fd_scale, f"{label} at beta={beta}: dX mismatch {dev:.3e}"
            # (e) expanded log-derivative solves its anticommutator equation
            sld = sld_second_order(probe, bath, beta, expansion=exp)
            p = exp.populations
            l0 = sld.l0_diag
            pi_x = exp.weighted_x()
            lhs = 0.5 * (
                sld.alpha * p[None, :] + p[:, None] * sld.alpha
                + np.diag(l0) @ pi_x + pi_x @ np.diag(l0)
            )
            rhs = (p * l0)[:, None] * exp.x + p[:, None] * exp.x_dbeta
            resid = float(np.max(np.abs(lhs - rhs)))
            assert resid <= 1e-10 * max(1.0, float(np.max(np.abs(rhs)))), (
                f"{label} at beta={beta}: log-derivative residual {resid:.3e}"
            )

    # (d) the quantum bound dominates the energy-measurement bound on every
    # exact reduced state
    exact_models = [m.joint for m in reference_two_qubit_models().values()]
    exact_models.append(lambda g: JointModel(probe_qubit(1.0, math.pi / 4.0), bath_qubit(1.0), g))
    for make in exact_models:
        for g in (0.02, 0.1, 0.3):
            for beta in BETAS_REFERENCE:
                f, i = exact_fishers(make(g), beta)
                assert f - i >= -1e-10, (
                    f"gamma={g}, beta={beta}: F = {f!r} < I = {i!r}"
                )

    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"property suites took {elapsed:.1f} s (budget 60 s)"


# ---------------------------------------------------------------------------
# figure-data emission (criterion 9)
# ---------------------------------------------------------------------------


def load_report(csv_path):
    lines = csv_path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    rows = [line.split(",") for line in lines[1:]]
    cols = {name: np.array([float(r[i]) for r in rows]) for i, name in enumerate(CSV_COLUMNS[:14])}
    return rows, cols


def test_criterion_9_figure_reports_have_documented_shapes(tmp_path, config_dir):
    out1 = tmp_path / "oscillator.csv"
    rc = main(["report", "--config", str(config_dir / "report_oscillator_ohmic.json"), "--out", str(out1)])
    assert rc == 0
    rows, c = load_report(out1)
    assert len(rows) == 25
    beta = c["beta"]
    assert np.all(np.diff(beta) > 0)
    # hot end: the bare bound saturates at the classical value 1
    assert abs(c["C_S"][0] - 1.0) < 0.05
    # the bare bound only degrades as the probe gets colder
    assert np.all(np.diff(c["C_S"]) < 0)
    # at the cold end the coupling correction is negative: the attainable
    # bound sits below the local-thermal one
    assert c["xi"][-1] < 0.0
    assert c["snr_sq_pert"][-1] < c["snr_sq_local"][-1]
    # there is an intermediate window where the coupling helps
    assert np.max(c["xi"]) > 0.0

    out2 = tmp_path / "qubit.csv"
    rc = main(["report", "--config", str(config_dir / "report_qubit_transverse.json"), "--out", str(out2)])
    assert rc == 0
    rows, c = load_report(out2)
    assert len(rows) == 50
    # transverse-coupled qubit: the correction is negative everywhere, so the
    # perturbative bound is below the local-thermal bound at every point
    assert np.all(c["xi"] < 0.0)
    assert np.all(c["snr_sq_pert"] < c["snr_sq_local"])
    # both bounds vanish at the hot end
    peak = float(np.max(c["snr_sq_local"]))
    assert c["snr_sq_pert"][0] < 0.01 * peak
    assert c["snr_sq_local"][0] < 0.01 * peak
    # the bare bound rises to an interior optimum and falls off when cold
    k = int(np.argmax(c["C_S"]))
    assert 0 < k < len(rows) - 1
    assert np.all(np.diff(c["C_S"][: k + 1]) > 0)
    assert np.all(np.diff(c["C_S"][k:]) < 0)
