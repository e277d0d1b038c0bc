"""Compare the numba and numpy kernel backends on full trajectories.

Usage::

    python benchmarks/bench_kernels.py --sizes 8 12 --depth 40 --repeat 3

Both backends run the same trajectories in one process; the module-level
kernel binding is swapped between runs. The first numba call compiles, so
one warm-up trajectory runs before timing.
"""
from __future__ import annotations

import argparse
import time

from qe_mipt import _kernels_numba, _kernels_numpy, channels, circuit_engine, observables, stab_core
from qe_mipt.circuit_engine import CircuitSpec, run_trajectory
from qe_mipt.observables import make_observables

MODULES = (channels, circuit_engine, observables, stab_core)
BACKENDS = {"numba": _kernels_numba, "numpy": _kernels_numpy}


def use_backend(name: str) -> None:
    for mod in MODULES:
        mod.K = BACKENDS[name]


def time_trajectories(spec: CircuitSpec, names, repeat: int) -> float:
    obs = make_observables(names, spec.geometry, spec.L)
    run_trajectory(spec, obs, 0)
    start = time.perf_counter()
    for t in range(repeat):
        run_trajectory(spec, obs, t + 1)
    return (time.perf_counter() - start) / repeat


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12])
    ap.add_argument("--depth", type=int, default=40)
    ap.add_argument("--p", type=float, default=0.2)
    ap.add_argument("--q", type=float, default=0.1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--observables", nargs="+", default=["i3"])
    args = ap.parse_args(argv)

    print(f"{'L':>4} {'backend':>8} {'s/traj':>10} {'speedup':>8}")
    for L in args.sizes:
        spec = CircuitSpec.symmetric(args.q, geometry="square", L=L, p=args.p, depth=args.depth)
        times = {}
        for name in BACKENDS:
            use_backend(name)
            times[name] = time_trajectories(spec, args.observables, args.repeat)
        for name, t in times.items():
            print(f"{L:>4} {name:>8} {t:>10.4f} {times['numpy'] / t:>8.2f}")
    use_backend("numba")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
