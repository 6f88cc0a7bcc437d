"""Benchmark the compiled kernels against the pure-Python fallback.

Times the three hot kernels in isolation and one end-to-end FCI relearn with
each backend forced.  Run from the repository root:

    python benchmarks/kernel_benchmark.py
"""

import os
import subprocess
import sys
import time

import numpy as np

from streampag import _kernels_py

try:
    from streampag import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, reps):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def bench_partial_corr(backend, cov, s, reps=20000):
    return timeit(lambda: backend.partial_corr(cov, 0, 1, s, 1e-10), reps)


def bench_solve(backend, m, rhs, reps=5000):
    return timeit(lambda: backend.solve_spd(m, rhs, 1e-10), reps)


def bench_welford(backend, p, reps=20000):
    rng = np.random.default_rng(0)
    mean = np.zeros(p)
    scat = np.zeros((p, p))
    rows = rng.standard_normal((reps, p))
    state = {"tot": 0.0, "i": 0}

    def step():
        state["tot"] = backend.welford_update(mean, scat, state["tot"], rows[state["i"]], 1.0)
        state["i"] += 1

    return timeit(step, reps)


def end_to_end_relearn(backend_name):
    """One batch FCI relearn on a 15-var regime dataset with the backend forced."""
    code = (
        "import time, numpy as np\n"
        "import streampag as sp\n"
        "from streampag.citest import SampleSource\n"
        "spec = sp.RegimeDatasetSpec(n_vars=15, expected_neighbors=2.0, n_per_regime=5000,\n"
        "                            n_regimes=1, n_latents=2, seed=0)\n"
        "data, _, sems = sp.make_regime_dataset(spec)\n"
        "mean = data.mean(axis=0); c = data - mean\n"
        "src = SampleSource(cov=c.T @ c / len(data), n=len(data))\n"
        "t0 = time.perf_counter()\n"
        "res = sp.fci(src, sems[0].observed_names, sp.FciOptions(max_cond_size=3, max_pdsep_size=3))\n"
        "print(f'{time.perf_counter() - t0:.4f} {res.tests_used}')\n"
    )
    env = dict(os.environ, STREAMPAG_KERNELS=backend_name)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    elapsed, tests = out.stdout.split()
    return float(elapsed), int(tests)


def main():
    if _ckernels is None:
        print("compiled extension not built; install with `pip install -e .`")
        return 1
    rng = np.random.default_rng(7)
    print(f"{'kernel':<28}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for p, k in ((6, 2), (12, 4), (25, 6)):
        a = rng.standard_normal((p, p))
        cov = np.ascontiguousarray(a @ a.T + p * np.eye(p))
        s = np.array(sorted(rng.choice(np.arange(2, p), size=k, replace=False)), dtype=np.int64)
        t_py = bench_partial_corr(_kernels_py, cov, s, reps=4000)
        t_c = bench_partial_corr(_ckernels, cov, s, reps=40000)
        print(f"{f'partial_corr p={p} |S|={k}':<28}{t_py*1e6:>10.1f}us{t_c*1e6:>10.1f}us{t_py/t_c:>9.1f}x")
    for p in (6, 25):
        a = rng.standard_normal((p, p))
        m = np.ascontiguousarray(a @ a.T + p * np.eye(p))
        rhs = rng.standard_normal(p)
        t_py = bench_solve(_kernels_py, m, rhs, reps=4000)
        t_c = bench_solve(_ckernels, m, rhs, reps=20000)
        print(f"{f'solve_spd p={p}':<28}{t_py*1e6:>10.1f}us{t_c*1e6:>10.1f}us{t_py/t_c:>9.1f}x")
    for p in (6, 25):
        t_py = bench_welford(_kernels_py, p, reps=10000)
        t_c = bench_welford(_ckernels, p, reps=30000)
        print(f"{f'welford_update p={p}':<28}{t_py*1e6:>10.1f}us{t_c*1e6:>10.1f}us{t_py/t_c:>9.1f}x")

    print("\nend-to-end batch FCI relearn (15 vars, n=5000):")
    t_py, tests_py = end_to_end_relearn("python")
    t_c, tests_c = end_to_end_relearn("c")
    assert tests_py == tests_c, "backends must run identical test sequences"
    print(f"{'fci relearn':<28}{t_py:>10.3f}s {t_c:>10.3f}s {t_py/t_c:>9.1f}x  ({tests_c} CI tests)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
