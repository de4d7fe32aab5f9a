"""Compiled vs numpy kernels on the two hot loops.

Usage::

    python3 benchmarks/bench_kernels.py [--chain-length 5] [--steps 2000] [--repeat 3]

Times the Trotter program (one sector of the ring ladder, a batch of column
vectors) and the two-site Volterra march with both backends on identical
inputs, and checks that the results agree.
"""

import argparse
import sys
import time

import numpy as np

from mesoecho._kernels import _fallback
from mesoecho.evolution import TrotterStepper
from mesoecho.lattice import LadderSpec, enumerate_sectors

try:
    from mesoecho._kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_trotter(m, steps, columns):
    spec = LadderSpec(m, inter_coupling=0.1, ising_weight=1.0, xy_weight=1.0, boundary="periodic")
    sector = enumerate_sectors(m)[m]
    stepper = TrotterStepper(spec, sector, 0.01)
    prog = stepper.program(steps)
    args = (stepper._phases, stepper._has_phase, stepper._pair_a, stepper._pair_b, stepper._cos,
            stepper._sin, stepper._bond_ptr, stepper._kind_bond, prog)
    rng = np.random.default_rng(0)
    psi0 = np.ascontiguousarray(rng.normal(size=(sector.dim, columns)) + 0j)

    def run(mod):
        psi = psi0.copy()
        mod.apply_program(psi, *args)
        return psi

    label = f"trotter M={m} dim={sector.dim} cols={columns} substeps={steps}"
    return label, run


def bench_glbe(n):
    t = np.arange(n) * 0.01
    decay = np.exp(-0.2 * t)
    ks = np.cos(t / 2) ** 2 * decay
    kc = np.sin(t / 2) ** 2 * decay
    f1, f2 = ks + 0.5 * kc, kc + 0.5 * ks

    def run(mod):
        return np.concatenate(mod.glbe_march(ks, kc, f1, f2, 0.2, 0.05, 0.01))

    return f"volterra march n={n}", run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--chain-length", type=int, default=5)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--columns", type=int, default=4)
    p.add_argument("--glbe-points", type=int, default=4000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1

    cases = [
        bench_trotter(args.chain_length, args.steps, args.columns),
        bench_glbe(args.glbe_points),
    ]
    print(f"{'case':<48} {'cython s':>10} {'python s':>10} {'speedup':>8} {'max diff':>9}")
    for label, run in cases:
        tc, oc = best_of(lambda: run(_ckernels), args.repeat)
        tp, op = best_of(lambda: run(_fallback), args.repeat)
        diff = float(np.max(np.abs(oc - op)))
        print(f"{label:<48} {tc:>10.4f} {tp:>10.4f} {tp / tc:>7.1f}x {diff:>9.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
