"""Compare the compiled and numpy kernels on the surrogate-heavy hot path.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times one full transfer entropy evaluation (count + entropies) per length,
a batch of shuffled-source evaluations as the pipeline does per stock, and
a whole d-sweep in a subprocess per backend (the backend is fixed at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from infoflow import _pykernels

try:
    from infoflow import _ckernels
except ImportError:
    _ckernels = None


def one_te(kernels, target, source, k, l):
    counts = kernels.count_transitions(target, source, k, l, 3, 3)
    return kernels.entropies(counts)


def surrogate_batch(kernels, target, source, n, rng):
    for _ in range(n):
        one_te(kernels, target, rng.permutation(source), 1, 1)


SWEEP = """
import time
from infoflow import BACKEND
from infoflow.entropy import EmbeddingSpec
from infoflow.pipeline import DEFAULT_D_GRID, d_sweep
from infoflow.surrogates import SurrogateConfig
from infoflow.synthetic import ToyMarketSpec, gen_toy_market
index, stocks = gen_toy_market(ToyMarketSpec(n_stocks=20, length=5000, seed=1))
t0 = time.perf_counter()
d_sweep(index, stocks, DEFAULT_D_GRID, EmbeddingSpec(), SurrogateConfig(20, 0))
print(BACKEND, time.perf_counter() - t0)
"""


def sweep_seconds(pure):
    env = dict(os.environ)
    env.pop("INFOFLOW_PURE_PYTHON", None)
    if pure:
        env["INFOFLOW_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", SWEEP], env=env, capture_output=True, text=True, check=True)
    backend, seconds = out.stdout.split()
    return backend, float(seconds)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled extension not built; timing the python backend only")

    rng = np.random.default_rng(0)
    print(f"{'case':<28}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    cases = []
    for length in (1_000, 10_000, 100_000):
        for k, l in ((1, 1), (3, 3)):
            cases.append((f"te L={length} k={k} l={l}", length, k, l, 0))
    for n_sur in (20, 100):
        cases.append((f"surrogates L=10000 n={n_sur}", 10_000, 1, 1, n_sur))

    for label, length, k, l, n_sur in cases:
        x = rng.integers(0, 3, length).astype(np.int8)
        y = rng.integers(0, 3, length).astype(np.int8)
        times = {}
        for name, kern in backends.items():
            if n_sur:
                fn = lambda: surrogate_batch(kern, x, y, n_sur, np.random.default_rng(1))  # noqa: E731
            else:
                fn = lambda: one_te(kern, x, y, k, l)  # noqa: E731
            number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
            times[name] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
        row = f"{label:<28}" + "".join(f"{times[n] * 1e6:>10.0f}us" for n in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)

    label = "sweep 20 stocks x 25 d, 20 sur"
    times = dict(sweep_seconds(pure) for pure in (True, False))
    row = f"{label:<28}" + "".join(f"{times[n]:>11.2f}s" for n in backends if n in times)
    if "cython" in times:
        row += f"{times['python'] / times['cython']:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
