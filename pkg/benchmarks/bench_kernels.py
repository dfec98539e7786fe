"""Compare the numba and numpy backends for the Lindblad right-hand side and RK4.

Run ``python benchmarks/bench_kernels.py [--cutoffs 2 3 4] [--steps 2000]``.
The numba timings exclude JIT compilation (one warm-up call per kernel).
"""
import argparse
import time

import numpy as np

from photmol import _kernels
from photmol.model import SystemParams, liouvillian


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[2, 3, 4, 6])
    ap.add_argument("--steps", type=int, default=2000, help="RK4 steps per timing")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = _kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'cutoff':>6} {'dim':>5} {'backend':>7} {'rhs [us]':>10} {'rk4 [ms]':>10} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for n in args.cutoffs:
        L = liouvillian(SystemParams(n_max_a=n, n_max_b=n))
        d = L.space.dim
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        dt = 0.01 / L.spectral_radius_estimate()
        pack = L.kernel_pack
        base = None
        for b in backends:
            _kernels.lindblad_rhs(pack, rho, backend=b)
            _kernels.rk4_evolve(pack, rho, dt, 2, backend=b)
            t_rhs = best_of(lambda: _kernels.lindblad_rhs(pack, rho, backend=b), 50 * args.repeat)
            t_rk4 = best_of(lambda: _kernels.rk4_evolve(pack, rho, dt, args.steps, backend=b), args.repeat)
            base = t_rk4 if base is None else base
            print(f"{n:>6} {d:>5} {b:>7} {1e6 * t_rhs:>10.1f} {1e3 * t_rk4:>10.1f} {base / t_rk4:>7.2f}x")


if __name__ == "__main__":
    main()
