"""Compare the compiled kernels with the pure-Python twin.

    python benchmarks/bench_kernels.py [--repeat N] [--json]

Reports the median wall time of each kernel on fixed random inputs, the
speedup, and whether both backends returned identical results.
"""
import argparse
import json
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from pdfrelay import _pykernels as py

try:
    from pdfrelay import _ckernels as compiled
except ImportError:
    compiled = None


def inputs(seed=0):
    rng = np.random.default_rng(seed)
    g = rng.uniform(-2, 2, 6).tolist()
    p = [1.0, 1.0, 1.0]
    a = py.project(rng.standard_normal(13).tolist(), py.ALLOC_BLOCKS, p)
    rows = py.project(rng.standard_normal(9).tolist(), py.CUTSET_BLOCKS, p)
    return g, p, a, rows


def cases():
    g, p, a, rows = inputs()
    return {
        "corollary_rate x1000": (lambda m: [m.corollary_rate(g, a, p, 0) for _ in range(1000)]),
        "cutset_value x1000": (lambda m: [m.cutset_value(g, rows) for _ in range(1000)]),
        "pattern_search (rate)": (
            lambda m: m.pattern_search(0, g, a, py.ALLOC_BLOCKS, p, [1] * 13, 0.25, 0.5, 1e-6, 200000, 0)
        ),
        "pattern_search (cut-set)": (
            lambda m: m.pattern_search(1, g, rows, py.CUTSET_BLOCKS, p, [1] * 9, 0.25, 0.5, 1e-6, 200000, 0)
        ),
    }


def timed(fn, module, repeat):
    out, times = None, []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn(module)
        times.append(time.perf_counter() - t)
    return statistics.median(times), out


def end_to_end(pure: bool) -> float:
    code = (
        "import time; from pdfrelay.gaussian import GaussianTwoLevel; from pdfrelay.optimizer import maximize_min_rate, OptimizerConfig;"
        "net=GaussianTwoLevel(1.5,1.2,0.5,1.1,0.9,1.3,1,1,1); t=time.perf_counter();"
        "maximize_min_rate(net, OptimizerConfig(restarts=16)); print(time.perf_counter()-t)"
    )
    env = {"PDFRELAY_PURE_PYTHON": "1"} if pure else {}
    res = subprocess.run([sys.executable, "-c", code], env={**os.environ, **env}, capture_output=True, text=True, check=True)
    return float(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    results = []
    for name, fn in cases().items():
        t_py, r_py = timed(fn, py, args.repeat)
        t_c, r_c = timed(fn, compiled, args.repeat)
        results.append({"kernel": name, "python_s": t_py, "compiled_s": t_c, "speedup": t_py / t_c, "identical": r_py == r_c})
    e_py, e_c = end_to_end(True), end_to_end(False)
    results.append({"kernel": "maximize_min_rate (18 starts)", "python_s": e_py, "compiled_s": e_c, "speedup": e_py / e_c, "identical": None})
    if args.json:
        print(json.dumps(results, indent=2))
        return 0
    print(f"{'kernel':32s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}  identical")
    for r in results:
        same = "-" if r["identical"] is None else str(r["identical"])
        print(f"{r['kernel']:32s} {r['python_s'] * 1e3:8.2f}ms {r['compiled_s'] * 1e3:8.2f}ms {r['speedup']:7.1f}x  {same}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
