"""Compare the compiled and pure-Python supermex backends.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from passage import kernels
from passage.bitgrid import Sheet
from passage.engine import RunConfig, iterate


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def _kernel_cases():
    rng = np.random.default_rng(0)
    for h, w in ((256, 512), (1024, 2048)):
        dense = rng.random((h, w)) < 0.05
        s = Sheet.from_dense(dense)
        yield f"nim supermex {h}x{w}", lambda s=s: kernels.nim_supermex_rows(s.words, s.width)
        # a free z=0 cell ends the Chomp scan early, so keep column 0 marked
        dense[:, 0] = True
        c = Sheet.from_dense(dense)
        yield f"chomp supermex {h}x{w}", lambda c=c: kernels.chomp_supermex_rows(c.words, c.width, 1)


def _run_case(game, levels, height, width):
    def go():
        for _ in iterate(RunConfig(game, "pass", levels, height, width)):
            pass
    return f"{game} pass run X={levels} {height}x{width}", go


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = list(_kernel_cases()) + [_run_case("nim", 500, 1024, 2048),
                                     _run_case("chomp", 200, 232, 864)]
    names = sorted(kernels.BACKENDS)
    print(f"{'case':<40}" + "".join(f"{n:>12}" for n in names) + "     speedup")
    for label, fn in cases:
        row = {}
        for name in names:
            prev = kernels.use_backend(name)
            try:
                row[name] = _best(fn, args.repeat)
            finally:
                kernels.use_backend(prev)
        speed = f"{row['python'] / row['cython']:10.1f}x" if "cython" in row else "         -"
        print(f"{label:<40}" + "".join(f"{row[n] * 1e3:10.2f}ms" for n in names) + speed)


if __name__ == "__main__":
    main()
