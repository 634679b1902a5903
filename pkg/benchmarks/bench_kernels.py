"""Timing comparison of the compiled and pure-numpy kernel variants.

Runs each hot kernel (Jacobi eigensolver, gap integrals, correlation sums)
in both variants over a few problem sizes, plus one end-to-end SNR-bound
evaluation.  JIT compilation is triggered before timing starts.

Usage:  python benchmarks/bench_kernels.py [--repeats N]

The dispatcher choice (FCTHERM_PURE_NUMPY) does not matter here: both
variants are imported explicitly.
"""

import argparse
import timeit

import numpy as np

from fctherm import _kernels
from fctherm.models import ContinuumBath, probe_oscillator
from fctherm.metrology import snr_bound


def random_hermitian(d, rng):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


def best_of(fn, repeats):
    return min(timeit.repeat(fn, number=1, repeat=repeats))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    if not _kernels.HAVE_NUMBA:
        print("numba not importable; both columns will run the numpy code")
    _kernels.warmup()

    rows = []
    for d in (8, 32, 96):
        h = random_hermitian(d, rng)
        t_nb = best_of(lambda: _kernels.jacobi_eigh_numba(h), args.repeats)
        t_np = best_of(lambda: _kernels.jacobi_eigh_numpy(h), args.repeats)
        rows.append((f"jacobi_eigh      d={d:<3}", t_nb, t_np))

    for d, nu in ((8, 64), (32, 64), (32, 256)):
        e = np.sort(rng.standard_normal(d)) * 3.0
        u = np.linspace(0.0, 2.0, nu)
        c = rng.random(nu)
        s = rng.random((d, d))
        t_nb = best_of(lambda: _kernels.gap_integrals_numba(e, u, c), args.repeats)
        t_np = best_of(lambda: _kernels.gap_integrals_numpy(e, u, c), args.repeats)
        rows.append((f"gap_integrals    d={d:<3} n_u={nu:<3}", t_nb, t_np))
        t_nb = best_of(lambda: _kernels.sigma_nodes_numba(e, s, u), args.repeats)
        t_np = best_of(lambda: _kernels.sigma_nodes_numpy(e, s, u), args.repeats)
        rows.append((f"sigma_nodes      d={d:<3} n_u={nu:<3}", t_nb, t_np))

    probe = probe_oscillator(1.0, beta_design=5.0)
    bath = ContinuumBath(s=1.0, cutoff=100.0, dim_exponent=2.0)
    snr_bound(probe, bath, beta=5.0, gamma=0.1)  # warm any lazy setup
    t_e2e = best_of(lambda: snr_bound(probe, bath, beta=5.0, gamma=0.1), args.repeats)

    print(f"{'kernel':<32} {'numba [ms]':>12} {'numpy [ms]':>12} {'speedup':>9}")
    for name, t_nb, t_np in rows:
        print(f"{name:<32} {1e3 * t_nb:>12.3f} {1e3 * t_np:>12.3f} {t_np / t_nb:>8.1f}x")
    print(f"\nend-to-end snr_bound (oscillator, continuum bath): {1e3 * t_e2e:.2f} ms")


if __name__ == "__main__":
    main()
