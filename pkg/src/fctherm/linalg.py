"""Hermitian-operator utilities: spectra, thermal states, logarithmic derivatives.

Everything downstream works in the eigenbasis produced here, so this module
pins down the conventions once:

* eigenvalues ascending; within a degenerate cluster, columns are ordered by a
  lexicographic comparison of their (real, imag) entries, and every column's
  phase is fixed so its largest-magnitude entry is real and positive.  The
  decomposition of a given matrix is therefore reproducible bit-for-bit across
  runs and across the compiled / pure-numpy kernel paths up to rounding.
* thermal populations are computed from shifted energies, exp(-beta(E - E_min)),
  so no intermediate overflows for any beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import laguerre, legendre

from . import _kernels
from .errors import SingularSupportError
from .tolerances import DEFAULT_TOL, Tolerances

# Gauss-Laguerre weights carry a factor e^{x_i}; beyond ~170 nodes the largest
# abscissa exceeds 700 and that factor overflows float64.
MAX_LAGUERRE_NODES = 170


def require_hermitian(matrix: np.ndarray, tol: Tolerances = DEFAULT_TOL, name: str = "matrix") -> np.ndarray:
    """Validate and return a square complex Hermitian array."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
    drift = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if drift > tol.hermiticity * scale:
        raise ValueError(f"{name} is not Hermitian: max|M - M^dag| = {drift:.3e}")
    return m


@dataclass
class SpectralDecomposition:
    """Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix."""

    evals: np.ndarray
    evecs: np.ndarray
    matrix: np.ndarray
    sweeps: int = 0

    @property
    def dim(self) -> int:
        return self.evals.size

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        """Rotate an operator from the original basis into this eigenbasis."""
        return self.evecs.conj().T @ np.asarray(op, dtype=np.complex128) @ self.evecs

    def from_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        return self.evecs @ np.asarray(op, dtype=np.complex128) @ self.evecs.conj().T


def _tie_break(evals: np.ndarray, evecs: np.ndarray, cluster_rel: float):
    """Order degenerate clusters lexicographically and fix column phases."""
    d = evals.size
    if d == 0:
        return evals, evecs
    scale = max(1.0, float(np.max(np.abs(evals))))
    # phase gauge first so the lexicographic comparison is gauge-independent
    for j in range(d):
        col = evecs[:, j]
        i = int(np.argmax(np.abs(col)))
        piv = col[i]
        if abs(piv) > 0:
            evecs[:, j] = col * (np.conj(piv) / abs(piv))
            evecs[i, j] = abs(evecs[i, j])  # force exactly real
    # group near-equal eigenvalues and sort columns within each group
    start = 0
    while start < d:
        stop = start + 1
        while stop < d and evals[stop] - evals[stop - 1] <= cluster_rel * scale:
            stop += 1
        if stop - start > 1:
            block = evecs[:, start:stop]
            keys = np.empty((2 * block.shape[0], stop - start))
            keys[0::2, :] = np.round(block.real, 12)
            keys[1::2, :] = np.round(block.imag, 12)
            order = np.lexsort(keys[::-1])
            evecs[:, start:stop] = block[:, order]
        start = stop
    return evals, evecs


def eigendecompose(matrix: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> SpectralDecomposition:
    """Diagonalise a Hermitian matrix with the in-package cyclic Jacobi solver.

    Raises ValueError if the input is not Hermitian or if the result fails the
    unitarity / reconstruction checks.
    """
    m = require_hermitian(matrix, tol)
    w, v, sweeps = _kernels.jacobi_eigh(m, tol.eig_offdiag_rel)
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    w, v = _tie_break(w, v, tol.eig_cluster_rel)
    d = w.size
    scale = max(1.0, float(np.max(np.abs(m))) if m.size else 0.0)
    uni = float(np.max(np.abs(v.conj().T @ v - np.eye(d))))
    if uni > tol.eig_unitarity:
        raise ValueError(f"eigenvector matrix not unitary: deviation {uni:.3e}")
    rec = float(np.max(np.abs((v * w) @ v.conj().T - m)))
    if rec > tol.eig_reconstruction * scale:
        raise ValueError(f"spectral reconstruction failed: deviation {rec:.3e}")
    return SpectralDecomposition(evals=w, evecs=v, matrix=m, sweeps=sweeps)


@dataclass
class DensityOperator:
    """A validated density matrix."""

    matrix: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        m = require_hermitian(self.matrix, self.tol, name="density operator")
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > self.tol.unit_trace:
            raise ValueError(f"density operator trace {tr!r} differs from 1")
        self.matrix = m

    def min_eigenvalue(self) -> float:
        w, _, _ = _kernels.jacobi_eigh(self.matrix)
        return float(np.min(w))

    def check_positive(self, floor: float | None = None) -> float:
        """Return the minimum eigenvalue; raise if it is below the floor."""
        lo = self.tol.psd_state if floor is None else floor
        mn = self.min_eigenvalue()
        if mn < lo:
            raise ValueError(f"density operator has eigenvalue {mn:.3e} below {lo:.1e}")
        return mn


def gibbs_populations(evals: np.ndarray, beta: float):
    """Thermal populations and log partition function for a given spectrum.

    Uses shifted energies so the largest Boltzmann factor is exactly 1.
    Returns ``(populations, log_z)``.
    """
    e = np.asarray(evals, dtype=float)
    shifted = e - e.min()
    q = np.exp(-beta * shifted)
    z = q.sum()
    return q / z, float(np.log(z) - beta * e.min())


def gibbs_state(
    hamiltonian: np.ndarray | SpectralDecomposition,
    beta: float,
    tol: Tolerances = DEFAULT_TOL,
) -> tuple[DensityOperator, float]:
    """Thermal state exp(-beta H)/Z and its log partition function.

    Accepts either a Hermitian matrix or an existing spectral decomposition.
    ``beta`` must be >= 0; beta == 0 gives the maximally mixed state.
    """
    if beta < 0:
        raise ValueError(f"inverse temperature must be >= 0, got {beta}")
    decomp = (
        hamiltonian
        if isinstance(hamiltonian, SpectralDecomposition)
        else eigendecompose(hamiltonian, tol)
    )
    p, log_z = gibbs_populations(decomp.evals, beta)
    rho = (decomp.evecs * p) @ decomp.evecs.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho, tol), log_z


def dephase(op: np.ndarray, decomp: SpectralDecomposition) -> np.ndarray:
    """Project an operator onto the diagonal of the given eigenbasis.

    Returns the operator expressed in the *original* basis with all
    off-diagonal eigenbasis elements removed.
    """
    diag = np.real(np.diag(decomp.to_eigenbasis(op)))
    return (decomp.evecs * diag) @ decomp.evecs.conj().T


def sld_solve(
    rho: np.ndarray | DensityOperator,
    drho: np.ndarray,
    tol: Tolerances = DEFAULT_TOL,
) -> np.ndarray:
    """Solve (L rho + rho L)/2 = drho for the symmetric logarithmic derivative.

    Works in the eigenbasis of ``rho``:  L_ij = 2 drho_ij / (lambda_i + lambda_j).
    Directions with lambda_i + lambda_j below ``tol.sld_support`` are null: if
    the derivative has weight above ``tol.sld_kernel_drho`` there the equation
    has no solution on the support and :class:`SingularSupportError` is raised;
    otherwise those components are set to zero.
    """
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)
    dec = eigendecompose(mat, tol)
    drho = require_hermitian(drho, tol, name="state derivative")
    tr_d = abs(complex(np.trace(drho)))
    if tr_d > 1e-10 * max(1.0, float(np.linalg.norm(drho))):
        raise ValueError(
            f"state derivative has trace {tr_d:.3e}; a trace-preserving family is required"
        )
    dr = dec.to_eigenbasis(drho)
    lam = dec.evals
    pair = lam[:, None] + lam[None, :]
    null = pair < tol.sld_support
    if np.any(null & (np.abs(dr) > tol.sld_kernel_drho)):
        worst = float(np.max(np.abs(dr[null])))
        raise SingularSupportError(
            f"derivative weight {worst:.3e} on a null direction of the state"
        )
    safe = np.where(null, 1.0, pair)
    l_eig = np.where(null, 0.0, 2.0 * dr / safe)
    l_eig = 0.5 * (l_eig + l_eig.conj().T)
    return dec.from_eigenbasis(l_eig)


def qfi_from_sld(rho: np.ndarray | DensityOperator, sld: np.ndarray) -> float:
    """Quantum Fisher information tr(L^2 rho)."""
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=np.complex128)
    return float(np.real(np.trace(sld @ sld @ mat)))


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights approximating an integral."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    degree: int  # polynomials integrated exactly (times the natural weight)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def quad_finite(n: int, a: float, b: float) -> QuadratureRule:
    """Gauss-Legendre rule with n nodes on [a, b]; exact for degree <= 2n-1."""
    if n < 1:
        raise ValueError("need at least one node")
    x, w = legendre.leggauss(n)
    half = 0.5 * (b - a)
    return QuadratureRule(
        nodes=half * x + 0.5 * (a + b),
        weights=half * w,
        kind="gauss-legendre",
        degree=2 * n - 1,
    )


def quad_thermal_frequency(n: int, cutoff: float, beta: float, split: float = 30.0) -> QuadratureRule:
    """Frequency rule for integrands weighted by both exp(-w/cutoff) and
    thermal kernels with structure at w ~ 1/beta.

    For beta*cutoff <= split a single Gauss-Laguerre rule at the cutoff scale
    resolves everything.  In the cold regime the two scales separate and that
    rule has no nodes in the infrared where the thermal weight lives, so an
    extra structure is needed:

      [0, split/beta]          Gauss-Legendre; all thermal-kernel structure
                               (features of width ~1/beta) lives here, and
                               exp(-beta w) < exp(-split) beyond it,
      [split/beta, 2*cutoff]   Gauss-Legendre; the kernels decay algebraically
                               (a 1/w series) which a Laguerre rule anchored
                               this close to the origin resolves only slowly,
      [2*cutoff, inf)          shifted Gauss-Laguerre; pure exponential decay
                               times a slowly varying factor.

    Spectral features tied to a system gap E are resolved provided
    beta * E <~ split, i.e. for any level the thermal state populates.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if beta * cutoff <= split:
        # single-scale regime; the Laguerre weight factor caps the node count
        return quad_semiinfinite(min(n, MAX_LAGUERRE_NODES), scale=cutoff)
    w_split = split / beta
    n_low = max(1, n // 2)
    n_mid = max(8, (n - n_low) * 3 // 5)
    n_tail = max(8, n - n_low - n_mid)
    low = quad_finite(n_low, 0.0, w_split)
    mid = quad_finite(n_mid, w_split, 2.0 * cutoff)
    tail = quad_semiinfinite(n_tail, scale=cutoff)
    return QuadratureRule(
        nodes=np.concatenate([low.nodes, mid.nodes, 2.0 * cutoff + tail.nodes]),
        weights=np.concatenate([low.weights, mid.weights, tail.weights]),
        kind="legendre+laguerre",
        degree=min(low.degree, mid.degree, tail.degree),
    )


def quad_imaginary_time(n: int, beta: float, layer: float | None = None) -> QuadratureRule:
    """Rule on [0, beta] for thermal imaginary-time integrands.

    Correlators of a continuum environment with frequency cutoff 1/layer decay
    algebraically over a width ~layer next to both endpoints, with amplitude
    growing as 1/layer^2; a single Gauss-Legendre rule cannot see that
    structure once layer << beta.  This rule tiles [0, beta/2] with panels
    graded geometrically upward from the layer scale, mirrors them about
    beta/2, and places a small Gauss-Legendre rule on each panel, so every
    intermediate scale between layer and beta is resolved.  With no layer (or
    one comparable to beta) it reduces to the plain rule.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if layer is None or not 0.0 < layer < 0.125 * beta:
        return quad_finite(n, 0.0, beta)
    edges = [0.0]
    b = float(layer)
    while b < 0.5 * beta:
        edges.append(b)
        b *= 4.0
    edges.append(0.5 * beta)
    m = max(10, int(n) // (2 * (len(edges) - 1)))
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        panel = quad_finite(m, lo, hi)
        mirror = quad_finite(m, beta - hi, beta - lo)
        nodes.extend((panel.nodes, mirror.nodes))
        weights.extend((panel.weights, mirror.weights))
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    order = np.argsort(nodes)
    return QuadratureRule(
        nodes=nodes[order],
        weights=weights[order],
        kind="legendre-graded",
        degree=2 * m - 1,
    )


def quad_semiinfinite(n: int, scale: float = 1.0) -> QuadratureRule:
    """Gauss-Laguerre rule for integrals over [0, inf) with decay rate 1/scale.

    The substitution x = omega / scale makes the rule exact for
    p(omega) * exp(-omega/scale) with p of degree <= 2n-1.  The e^{x} factor
    folded into the weights caps the node count (see MAX_LAGUERRE_NODES).
    """
    if n < 1:
        raise ValueError("need at least one node")
    if n > MAX_LAGUERRE_NODES:
        raise ValueError(
            f"{n} Laguerre nodes would overflow the e^x weight factor; "
            f"maximum is {MAX_LAGUERRE_NODES}"
        )
    if scale <= 0:
        raise ValueError("scale must be positive")
    x, w = laguerre.laggauss(n)
    return QuadratureRule(
        nodes=scale * x,
        weights=scale * w * np.exp(x),
        kind="gauss-laguerre",
        degree=2 * n - 1,
    )
