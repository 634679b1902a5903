"""Second-order coupling corrections to the probe's reduced thermal state.

For a probe coupled to a thermal environment through gamma * S (x) B with a
zero-mean B, the reduced state is

    rho(gamma) = pi (1 + gamma^2 X) + O(gamma^4),

with pi the bare thermal state.  In the probe eigenbasis (energies E_n,
populations p_n, coupling matrix S_nk):

    X_nn     = int_0^beta du (beta - u) C_B(u) [ sigma_n(u) - C_S(u) ]
    X_nm     = (1/(E_n - E_m)) sum_k S_nk S_km
               int_0^beta du C_B(u) [ e^{u (E_m - E_k)} e^{beta (E_n - E_m)}
                                      - e^{u (E_n - E_k)} ],  n != m

where sigma_n(u) = sum_k |S_nk|^2 e^{-u (E_k - E_n)} and C_S = sum_n p_n
sigma_n is the probe correlator.  Near-degenerate pairs use the analytic
limit of the second line.  The beta-derivative of X, needed for estimation
theory, is available both analytically and by finite differences.

When the environment mean is non-zero there is also a first-order term,
handled by :func:`p1_operator`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import CouplingTooStrongError
from .linalg import (
    DensityOperator,
    QuadratureRule,
    gibbs_populations,
    quad_imaginary_time,
)
from .models import (
    DEFAULT_FREQ_NODES,
    ContinuumBath,
    CorrelationFn,
    DiscreteBath,
    ProbeModel,
    bath_correlation,
)
from .tolerances import DEFAULT_TOL, Tolerances

DEFAULT_TIME_NODES = 64  # imaginary-time rule size


def _as_bath_correlation(bath, beta: float, n_omega: int) -> CorrelationFn:
    if isinstance(bath, CorrelationFn):
        if abs(bath.beta - beta) > 1e-15 * max(1.0, beta):
            raise ValueError("bath correlator was built for a different beta")
        return bath
    if isinstance(bath, (ContinuumBath, DiscreteBath)):
        return bath_correlation(bath, beta, n_omega)
    raise TypeError(f"unsupported bath specification: {type(bath).__name__}")


@dataclass
class MeanForceExpansion:
    """Second-order reduced-state expansion in the probe eigenbasis."""

    beta: float
    evals: np.ndarray
    populations: np.ndarray
    x: np.ndarray                    # correction matrix, probe eigenbasis
    x_dbeta: np.ndarray | None       # analytic d X / d beta (same basis)
    rule: QuadratureRule
    hermiticity_drift: float = 0.0   # max |pi X - (pi X)^dag| before symmetrisation
    gamma: float | None = None
    state: DensityOperator | None = None  # assembled state, original basis
    p1: np.ndarray | None = None     # first-order term, set only for non-zero-mean baths
    trace_renormalised: bool = False

    def weighted_x(self) -> np.ndarray:
        """pi X in the eigenbasis (the actual state correction)."""
        return self.populations[:, None] * self.x

    def trace_identity(self) -> float:
        """tr(pi X); vanishes identically for the exact expansion."""
        return float(np.real(np.trace(self.weighted_x())))


def _assemble_x(
    probe: ProbeModel,
    corr_b: CorrelationFn,
    beta: float,
    n_u: int,
    tol: Tolerances,
    want_dbeta: bool,
):
    """Shared assembly for X and (optionally) its analytic beta-derivative."""
    rule = quad_imaginary_time(n_u, beta, corr_b.layer_width)
    u = rule.nodes
    w = rule.weights
    evals = probe.decomp.evals
    s_eig = probe.decomp.to_eigenbasis(probe.coupling)
    abs_sq = np.abs(s_eig) ** 2
    p, _ = gibbs_populations(evals, beta)

    phi_b = np.asarray(corr_b.value(u), dtype=float)
    sigma = _kernels.sigma_nodes(evals, abs_sq, u)
    phi_s = p @ sigma  # probe correlator as the same level sum

    # diagonal: sum_j w_j (beta-u_j) C_B [sigma_n - C_S]
    wtilde = w * (beta - u) * phi_b
    x_diag = (sigma - phi_s[None, :]) @ wtilde

    # off-diagonal via gap-resolved integrals and two matrix products
    d = evals.size
    gap = evals[:, None] - evals[None, :]  # gap[n, m] = E_n - E_m
    scale = max(float(np.max(np.abs(evals))), float(evals.max() - evals.min()), 1e-300)
    degen = np.abs(gap) < tol.degeneracy_rel * scale

    g_phi = _kernels.gap_integrals(evals, u, w * phi_b)     # G[a,b] ~ e^{u(E_b-E_a)}
    g_phi_w = _kernels.gap_integrals(evals, u, wtilde)      # with (beta-u) C_B weight
    exp_bgap = np.exp(beta * gap)

    a1 = s_eig @ (s_eig * g_phi)
    a2 = (s_eig * g_phi.T) @ s_eig
    safe_gap = np.where(degen, 1.0, gap)
    x_reg = (exp_bgap * a1 - a2) / safe_gap
    x_deg = s_eig @ (s_eig * g_phi_w)
    x = np.where(degen, x_deg, x_reg)
    np.fill_diagonal(x, x_diag)

    x_dbeta = None
    if want_dbeta:
        dphi_b = np.asarray(corr_b.dbeta(u), dtype=float)
        dphi_s = (-p * (evals - float(np.dot(p, evals)))) @ sigma
        kern2 = w * (phi_b + (beta - u) * dphi_b)
        dx_diag = (sigma - phi_s[None, :]) @ kern2 - float(np.dot(wtilde, dphi_s))

        g_dphi = _kernels.gap_integrals(evals, u, w * dphi_b)
        g_kern2 = _kernels.gap_integrals(evals, u, kern2)
        a1d = s_eig @ (s_eig * g_dphi)
        a2d = (s_eig * g_dphi.T) @ s_eig
        dx_reg = (exp_bgap * a1d - a2d) / safe_gap + exp_bgap * a1
        dx_deg = s_eig @ (s_eig * g_kern2)
        x_dbeta = np.where(degen, dx_deg, dx_reg)
        np.fill_diagonal(x_dbeta, dx_diag)

    return evals, p, x, x_dbeta, rule


def x_matrix(
    probe: ProbeModel,
    bath,
    beta: float,
    n_u: int = DEFAULT_TIME_NODES,
    n_omega: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
    with_dbeta: bool = True,
) -> MeanForceExpansion:
    """Second-order state-correction matrix X (and analytic dX/dbeta).

    ``bath`` may be a bath specification or a ready-made correlator.  The
    expansion is derived under a zero-mean environment coupling; a bath whose
    coupling operator has a thermal mean above ``tol.assumption_mean`` is
    refused, because the reduced state then picks up a first-order term that
    this routine cannot represent (see :func:`p1_operator`).
    """
    corr_b = _as_bath_correlation(bath, beta, n_omega or DEFAULT_FREQ_NODES)
    mean_b = getattr(corr_b, "mean", None)
    if mean_b is not None and abs(mean_b) > tol.assumption_mean:
        raise ValueError(
            f"environment coupling has thermal mean {mean_b:.3e}; the second-order "
            "expansion assumes a zero-mean coupling — handle the first-order term "
            "with p1_operator or centre the coupling operator"
        )
    evals, p, x, dx, rule = _assemble_x(probe, corr_b, beta, n_u, tol, with_dbeta)
    weighted = p[:, None] * x
    drift = float(np.max(np.abs(weighted - weighted.conj().T)))
    return MeanForceExpansion(
        beta=beta,
        evals=evals,
        populations=p,
        x=x,
        x_dbeta=dx,
        rule=rule,
        hermiticity_drift=drift,
    )


def x_diag(
    probe: ProbeModel,
    bath,
    beta: float,
    n_u: int = DEFAULT_TIME_NODES,
    n_omega: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Diagonal of the second-order correction in the probe eigenbasis."""
    exp = x_matrix(probe, bath, beta, n_u, n_omega, tol, with_dbeta=False)
    return np.real(np.diag(exp.x)).copy()


def x_offdiag(
    probe: ProbeModel,
    bath,
    beta: float,
    n_u: int = DEFAULT_TIME_NODES,
    n_omega: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Off-diagonal part of the second-order correction (diagonal zeroed)."""
    exp = x_matrix(probe, bath, beta, n_u, n_omega, tol, with_dbeta=False)
    out = exp.x.copy()
    np.fill_diagonal(out, 0.0)
    return out


def x_matrix_fd_dbeta(
    probe: ProbeModel,
    bath,
    beta: float,
    n_u: int = DEFAULT_TIME_NODES,
    n_omega: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
    step_rel: float | None = None,
    richardson: bool = True,
) -> np.ndarray:
    """Finite-difference dX/dbeta for cross-validation of the analytic path.

    Central differences with step h = step_rel * beta; with ``richardson`` the
    h and h/2 estimates are combined to fourth order.
    """
    if isinstance(bath, CorrelationFn):
        raise ValueError(
            "finite-difference path needs a bath specification, not a fixed-beta correlator"
        )
    h = (step_rel if step_rel is not None else tol.fd_step_rel) * beta

    def x_at(b: float) -> np.ndarray:
        return x_matrix(probe, bath, b, n_u, n_omega, tol, with_dbeta=False).x

    d1 = (x_at(beta + h) - x_at(beta - h)) / (2.0 * h)
    if not richardson:
        return d1
    d2 = (x_at(beta + 0.5 * h) - x_at(beta - 0.5 * h)) / h
    return (4.0 * d2 - d1) / 3.0


def mfg_second_order(
    probe: ProbeModel,
    bath,
    gamma: float,
    beta: float,
    n_u: int = DEFAULT_TIME_NODES,
    n_omega: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> MeanForceExpansion:
    """Assembled second-order reduced state pi (1 + gamma^2 X).

    Raises :class:`CouplingTooStrongError` when the assembled state has an
    eigenvalue below ``tol.psd_mean_force`` (the expansion left its regime).
    Warns when symmetrising away more than ``tol.hermit_drift``.
    """
    exp = x_matrix(probe, bath, beta, n_u, n_omega, tol, with_dbeta=True)
    if exp.hermiticity_drift > tol.hermit_drift:
        warnings.warn(
            f"state correction drifted from Hermitian by {exp.hermiticity_drift:.3e}; "
            "symmetrised",
            stacklevel=2,
        )
    rho_eig = np.diag(exp.populations).astype(complex) + gamma**2 * exp.weighted_x()
    rho_eig = 0.5 * (rho_eig + rho_eig.conj().T)
    rho = probe.decomp.from_eigenbasis(rho_eig)
    rho = 0.5 * (rho + rho.conj().T)
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > tol.unit_trace:
        rho = rho / tr
        exp.trace_renormalised = True
    state = DensityOperator(rho, tol.replaced(psd_state=tol.psd_mean_force))
    mn = state.min_eigenvalue()
    if mn < tol.psd_mean_force:
        raise CouplingTooStrongError(
            f"second-order state has eigenvalue {mn:.3e} < {tol.psd_mean_force:.1e}; "
            f"coupling gamma={gamma} is too strong at beta={beta}"
        )
    exp.gamma = gamma
    exp.state = state
    return exp


def p1_operator(
    probe: ProbeModel, beta: float, mean_b: float, basis: str = "eigen"
) -> np.ndarray:
    """First-order state correction present when the environment mean is non-zero.

    rho(gamma) = pi + gamma * p1 + O(gamma^2),
    p1 = -<B> pi int_0^beta db1 e^{b1 H} (S - <S>) e^{-b1 H}.

    Returns the matrix in the probe eigenbasis (or the original basis with
    ``basis="original"``).  Identically zero when ``mean_b == 0``.
    """
    evals = probe.decomp.evals
    p, _ = gibbs_populations(evals, beta)
    s_eig = probe.decomp.to_eigenbasis(probe.coupling)
    mean_s = float(np.real(np.dot(p, np.diag(s_eig))))
    s_bar = s_eig - mean_s * np.eye(evals.size)
    gap = evals[:, None] - evals[None, :]
    small = np.abs(gap) < 1e-300
    tau = np.where(small, beta, np.expm1(beta * np.where(small, 1.0, gap)) / np.where(small, 1.0, gap))
    p1 = -mean_b * (p[:, None] * s_bar * tau)
    if basis == "eigen":
        return p1
    if basis == "original":
        return probe.decomp.from_eigenbasis(p1)
    raise ValueError(f"unknown basis {basis!r}")


@dataclass
class SldExpansion:
    """Logarithmic-derivative expansion L = L0 + gamma^2 A for the inverse
    temperature, in the probe eigenbasis."""

    beta: float
    evals: np.ndarray
    populations: np.ndarray
    l0_diag: np.ndarray          # zeroth order: <H> - E_n on the diagonal
    alpha: np.ndarray            # second-order coefficient matrix A
    hermiticity_drift: float = 0.0

    def total(self, gamma: float) -> np.ndarray:
        return np.diag(self.l0_diag).astype(complex) + gamma**2 * self.alpha


def sld_second_order(
    probe: ProbeModel,
    bath,
    beta: float,
    n_u: int = DEFAULT_TIME_NODES,
    n_omega: int | None = None,
    tol: Tolerances = DEFAULT_TOL,
    expansion: MeanForceExpansion | None = None,
) -> SldExpansion:
    """Logarithmic derivative of the second-order state with respect to beta.

    Solving (L rho + rho L)/2 = d rho/d beta order by order gives, in the
    probe eigenbasis,

        A_nm = [2 p_n dX_nm + p_n (E_m - E_n) X_nm] / (p_n + p_m),

    whose diagonal is simply dX_nn.  The assembled matrix is Hermitian; it is
    symmetrised and the drift recorded.
    """
    exp = expansion if expansion is not None else x_matrix(
        probe, bath, beta, n_u, n_omega, tol, with_dbeta=True
    )
    if exp.x_dbeta is None:
        raise ValueError("expansion must carry the beta-derivative of X")
    p = exp.populations
    evals = exp.evals
    pair = p[:, None] + p[None, :]
    gap_mn = evals[None, :] - evals[:, None]  # (E_m - E_n) indexed [n, m]
    alpha = (2.0 * p[:, None] * exp.x_dbeta + p[:, None] * gap_mn * exp.x) / pair
    drift = float(np.max(np.abs(alpha - alpha.conj().T)))
    alpha = 0.5 * (alpha + alpha.conj().T)
    # On the diagonal the solve reduces to A_nn = dX_nn exactly; write it as such
    # so downstream population sums reproduce the derivative without rounding.
    np.fill_diagonal(alpha, np.real(np.diag(exp.x_dbeta)))
    mean_e = float(np.dot(p, evals))
    return SldExpansion(
        beta=beta,
        evals=evals,
        populations=p,
        l0_diag=mean_e - evals,
        alpha=alpha,
        hermiticity_drift=drift,
    )
