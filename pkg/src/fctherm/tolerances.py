"""Central numerical-tolerance record.

Every hard-coded threshold used by the library lives here, so a run can be
tightened or loosened from one place (or from the CLI config) without hunting
through module code.
"""

from __future__ import annotations

from dataclasses import dataclass, replace, fields


@dataclass(frozen=True)
class Tolerances:
    """All numerical thresholds used across the library.

    Values are absolute unless the name says otherwise.
    """

    # --- operator / state validation ---
    hermiticity: float = 1e-12        # max |M - M^dag| allowed on input operators
    unit_trace: float = 1e-12         # |tr(rho) - 1| for density operators
    psd_state: float = -1e-12         # min eigenvalue floor for exact density operators
    psd_mean_force: float = -1e-8     # floor for the assembled second-order state;
                                      # below this the coupling is too strong
    hermit_drift: float = 1e-12       # symmetrization drift flagged on assembled states

    # --- eigensolver ---
    eig_offdiag_rel: float = 1e-14    # Jacobi convergence: off-norm relative to ||H||
    eig_reconstruction: float = 1e-10 # ||V w V^dag - H|| check
    eig_unitarity: float = 1e-10      # ||V^dag V - 1|| check
    eig_cluster_rel: float = 1e-12    # relative gap below which eigenvalues are tied

    # --- symmetric logarithmic derivative ---
    sld_support: float = 1e-14        # eigenvalue-pair sum treated as a null direction
    sld_kernel_drho: float = 1e-12    # |drho_ij| allowed on a null direction
    sld_residual: float = 1e-10       # ||(L rho + rho L)/2 - drho|| invariant

    # --- perturbation theory ---
    degeneracy_rel: float = 1e-10     # |gap| < this * ||H_S|| uses the degenerate limit
    fd_step_rel: float = 1e-5         # finite-difference step h = fd_step_rel * beta
    deriv_cross_rel: float = 1e-6     # analytic vs finite-difference dX/dbeta agreement
    traceless_x: float = 1e-10        # |tr(pi_S X_S)| invariant
    kms: float = 1e-10                # correlation-function KMS symmetry invariant

    # --- metrology cross-checks ---
    dual_formula_rel: float = 1e-7    # integral-route vs sum-route Fisher coefficient
    cfi_qfi_pert: float = 1e-14       # perturbative classical == quantum coefficient
    kernel_route_rel: float = 1e-6    # spectral-kernel route vs direct coefficient

    # --- oracle ---
    richardson_rel: float = 1e-8      # step-halving consistency of exact derivatives
    order_floor_factor: float = 1e3   # deviations below factor*eps*scale are noise

    # --- model construction ---
    tail_population: float = 1e-8     # oscillator truncation: top-level population
    assumption_mean: float = 1e-12    # |<B>| threshold for the zero-mean assumption

    def replaced(self, **kwargs: float) -> "Tolerances":
        """Return a copy with the named fields overridden."""
        return replace(self, **kwargs)


#: Names accepted by :meth:`Tolerances.replaced` (used by config validation).
TOLERANCE_FIELDS = tuple(f.name for f in fields(Tolerances))

DEFAULT_TOL = Tolerances()
