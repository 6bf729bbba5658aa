"""Time the numba kernels against the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. The kernel rows import both
backends directly; the envelope rows run a subprocess per backend so that
``DEPTHFC_PURE_NUMPY`` picks the implementation.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from depthfc import _kernels_numba, _kernels_numpy


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel':<28}{'numba s':>12}{'numpy s':>12}{'ratio':>8}")
    for n, P in [(200, 25), (1000, 100), (5000, 100)]:
        x = rng.normal(size=(n, P))
        _kernels_numba.mbd_counts(x[:3, :3])
        a = best_of(lambda: _kernels_numba.mbd_counts(x), args.repeat)
        b = best_of(lambda: _kernels_numpy.mbd_counts(x), args.repeat)
        print(f"{f'mbd_counts {n}x{P}':<28}{a:>12.5f}{b:>12.5f}{b / a:>8.1f}")
    for n, P in [(200, 25), (2000, 50)]:
        cands = rng.normal(size=(n, P))
        focal = rng.normal(size=P) * 0.5
        _kernels_numba.greedy_cover(cands[:2], focal)
        a = best_of(lambda: _kernels_numba.greedy_cover(cands, focal), args.repeat)
        b = best_of(lambda: _kernels_numpy.greedy_cover(cands, focal), args.repeat)
        print(f"{f'greedy_cover {n}x{P}':<28}{a:>12.5f}{b:>12.5f}{b / a:>8.1f}")

    for backend, flag in [("numba", "0"), ("numpy", "1")]:
        env = dict(os.environ, DEPTHFC_PURE_NUMPY=flag)
        out = subprocess.run([sys.executable, "-c", ENVELOPE_SNIPPET, str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        print(f"{'build_envelope 200x50':<28}{backend:>12}{float(out.stdout):>12.5f}")


ENVELOPE_SNIPPET = """
import sys, timeit
from depthfc.core import PeriodGrid
from depthfc.envelope import build_envelope
from depthfc.simulate import PCProcessSpec, make_pc_trajectory
lib, focal = make_pc_trajectory(PCProcessSpec("Y1", PeriodGrid(50, 25), 201, seed=1))
build_envelope(lib, focal)
print(min(timeit.repeat(lambda: build_envelope(lib, focal), number=1, repeat=int(sys.argv[1]))))
"""


if __name__ == "__main__":
    main()
