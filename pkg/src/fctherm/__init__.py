"""Finite-coupling quantum thermometry.

Numerical toolkit for temperature estimation with a probe that couples to its
environment at small but non-negligible strength: second-order reduced thermal
states, logarithmic derivatives, quantum and classical Fisher information, the
spectral decomposition of the coupling correction to the temperature
signal-to-noise ratio, and an exact small-system reference that every
perturbative formula is validated against.
"""

from ._kernels import HAVE_NUMBA, USE_NUMBA, warmup
from .config import GridSpec, RunConfig, ScalingSpec, SweepSpec, load_config, parse_config
from .errors import ConfigError, CouplingTooStrongError, FcthermError, SingularSupportError
from .linalg import (
    DensityOperator,
    QuadratureRule,
    SpectralDecomposition,
    dephase,
    eigendecompose,
    gibbs_populations,
    gibbs_state,
    qfi_from_sld,
    quad_finite,
    quad_imaginary_time,
    quad_semiinfinite,
    quad_thermal_frequency,
    require_hermitian,
    sld_solve,
)
from .metrology import (
    MetrologyReport,
    cfi_energy_dephasing,
    cfi_energy_general,
    cfi_energy_perturbative,
    energy_variance,
    gamma_function,
    high_T_asymptote,
    high_T_asymptote_rederived,
    qfi_perturbative_integral,
    qfi_perturbative_sum,
    snr_bound,
    snr_kernel,
    xi_via_spectral_kernel,
)
from .models import (
    ContinuumBath,
    ContinuumBathCorrelation,
    CorrelationFn,
    DiscreteBath,
    EigenbasisCorrelation,
    OscillatorCorrelation,
    ProbeModel,
    QubitCorrelation,
    bath_correlation,
    bath_mode,
    bath_qubit,
    load_operator_pair,
    mean_coupling,
    oscillator_levels,
    probe_correlation,
    probe_custom,
    probe_oscillator,
    probe_qubit,
    spectral_density,
    validate_pairing,
    zero_mean_ok,
)
from .oracle import (
    JointModel,
    OrderFit,
    ReferenceModel,
    default_gamma_grid,
    exact_fishers,
    exact_mfg,
    exact_sld,
    order_fit,
    partial_trace_bath,
    pauli_coefficient,
    reference_two_qubit_models,
    refine_linear,
    refine_quadratic,
    trace_distance,
)
from .perturbation import (
    MeanForceExpansion,
    SldExpansion,
    mfg_second_order,
    p1_operator,
    sld_second_order,
    x_diag,
    x_matrix,
    x_matrix_fd_dbeta,
    x_offdiag,
)
from .tolerances import DEFAULT_TOL, Tolerances

__version__ = "0.1.0"

__all__ = [
    "HAVE_NUMBA",
    "USE_NUMBA",
    "warmup",
    "GridSpec",
    "RunConfig",
    "ScalingSpec",
    "SweepSpec",
    "load_config",
    "parse_config",
    "ConfigError",
    "CouplingTooStrongError",
    "FcthermError",
    "SingularSupportError",
    "DensityOperator",
    "QuadratureRule",
    "SpectralDecomposition",
    "dephase",
    "eigendecompose",
    "gibbs_populations",
    "gibbs_state",
    "qfi_from_sld",
    "quad_finite",
    "quad_imaginary_time",
    "quad_semiinfinite",
    "quad_thermal_frequency",
    "require_hermitian",
    "sld_solve",
    "MetrologyReport",
    "cfi_energy_dephasing",
    "cfi_energy_general",
    "cfi_energy_perturbative",
    "energy_variance",
    "gamma_function",
    "high_T_asymptote",
    "high_T_asymptote_rederived",
    "qfi_perturbative_integral",
    "qfi_perturbative_sum",
    "snr_bound",
    "snr_kernel",
    "xi_via_spectral_kernel",
    "ContinuumBath",
    "ContinuumBathCorrelation",
    "CorrelationFn",
    "DiscreteBath",
    "EigenbasisCorrelation",
    "OscillatorCorrelation",
    "ProbeModel",
    "QubitCorrelation",
    "bath_correlation",
    "bath_mode",
    "bath_qubit",
    "load_operator_pair",
    "mean_coupling",
    "oscillator_levels",
    "probe_correlation",
    "probe_custom",
    "probe_oscillator",
    "probe_qubit",
    "spectral_density",
    "validate_pairing",
    "zero_mean_ok",
    "JointModel",
    "OrderFit",
    "ReferenceModel",
    "default_gamma_grid",
    "exact_fishers",
    "exact_mfg",
    "exact_sld",
    "order_fit",
    "partial_trace_bath",
    "pauli_coefficient",
    "reference_two_qubit_models",
    "refine_linear",
    "refine_quadratic",
    "trace_distance",
    "MeanForceExpansion",
    "SldExpansion",
    "mfg_second_order",
    "p1_operator",
    "sld_second_order",
    "x_diag",
    "x_matrix",
    "x_matrix_fd_dbeta",
    "x_offdiag",
    "DEFAULT_TOL",
    "Tolerances",
    "__version__",
]
