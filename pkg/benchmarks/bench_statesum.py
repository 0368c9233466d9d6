"""Time the compiled and pure-Python state-sum kernels on the shipped samples.

    python benchmarks/bench_statesum.py [--repeat N] [--r 21,31,41]

Prints one row per (sample, r, backend) with the best wall time over the
repeats, the number of admissible colorings and the speedup over the
Python kernel.  Values from both backends are compared as a sanity check.
"""
import argparse
import time

from reltv.quantum_arith import QuantumContext
from reltv.samples import load_sample
from reltv.statesum import StateSumOptions, available_backends, beta_colors, relative_tv

CASES = [("one_tet_one_edge", (101, 151)), ("one_tet_two_edge", (41, 101)),
         ("one_tet_three_edge", (21, 31, 41)), ("two_tet_two_edge", (41, 101))]


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--r", type=lambda s: [int(x) for x in s.split(",")], help="override the r values")
    args = ap.parse_args()
    backends = available_backends()
    print(f"{'sample':<20} {'r':>4} {'backend':<8} {'colorings':>10} {'seconds':>10} {'speedup':>8}")
    for name, rs in CASES:
        T = load_sample(name)
        for r in args.r or rs:
            ctx = QuantumContext(r)
            b = beta_colors([0.1] * T.num_edges, r)
            times, vals = {}, {}
            for be in ["python"] + [x for x in backends if x != "python"]:
                dt, res = best_of(lambda: relative_tv(T, b, ctx, StateSumOptions(backend=be)), args.repeat)
                times[be], vals[be] = dt, res.value
                print(f"{name:<20} {r:>4} {be:<8} {res.num_colorings:>10} {dt:>10.4f} {times['python'] / dt:>8.1f}")
            ref = vals["python"]
            for be, v in vals.items():
                if abs(v - ref) > 1e-9 * max(1.0, abs(ref)):
                    print(f"  warning: {be} differs from python by {abs(v - ref):.3g}")


if __name__ == "__main__":
    main()
