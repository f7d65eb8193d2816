#!/usr/bin/env python3
"""Compare the exact-rational backends on representative workloads.

The backend is fixed at import time, so every measurement runs in a
fresh interpreter with ``FEDOSOV_RATIONAL_BACKEND`` set explicitly.
Reported times are best-of-``--repeat`` wall-clock seconds.

Usage::

    python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json
import random
import time

from fedosov.engine import FormSeries, abelian_connection, star
from fedosov.geometry import preset_constant_curvature
from fedosov.jets import BaseJet
from fedosov.scalars import RATIONAL_BACKEND, GaussianRational

out = {"backend": RATIONAL_BACKEND}

t0 = time.perf_counter()
rng = random.Random(0)
acc = GaussianRational(1)
for _ in range(120_000):
    q = GaussianRational(rng.randrange(-99, 100), rng.randrange(-9, 10))
    acc = acc * q + GaussianRational(rng.randrange(1, 7))
out["scalar arithmetic"] = time.perf_counter() - t0

t0 = time.perf_counter()
conn = abelian_connection(preset_constant_curvature(2, 4), order=6)
out["connection build (order 6)"] = time.perf_counter() - t0

n, J = 2, 4
p = FormSeries.from_terms(n, J, [(0, (0,), BaseJet(n, J, {(1, 1, 0, 0): GaussianRational(3)}))])
q = FormSeries.from_terms(n, J, [(0, (2,), BaseJet(n, J, {(0, 0, 2, 0): GaussianRational(2)}))])
t0 = time.perf_counter()
star(p, q, conn)
out["star of 1-forms (order 6)"] = time.perf_counter() - t0

print(json.dumps(out))
"""


def run_once(backend: str) -> dict[str, float]:
    env = {**os.environ, "FEDOSOV_RATIONAL_BACKEND": backend}
    res = subprocess.run([sys.executable, "-c", CHILD], env=env,
                         capture_output=True, text=True)
    if res.returncode != 0:
        raise RuntimeError(f"{backend} run failed:\n{res.stderr}")
    return json.loads(res.stdout)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3,
                    help="runs per backend, best time wins (default 3)")
    args = ap.parse_args()

    backends = ["fractions"]
    try:
        import gmpy2  # noqa: F401
    except ImportError:
        print("gmpy2 not importable, benchmarking fractions only",
              file=sys.stderr)
    else:
        backends.insert(0, "gmpy2")

    best: dict[str, dict[str, float]] = {}
    for backend in backends:
        for _ in range(max(1, args.repeat)):
            out = run_once(backend)
            name = out.pop("backend")
            cur = best.setdefault(name, out)
            for k, v in out.items():
                cur[k] = min(cur.get(k, v), v)

    names = list(next(iter(best.values())))
    width = max(len(s) for s in names)
    header = f"{'workload':<{width}}" + "".join(f"  {b:>10}" for b in best)
    print(header)
    print("-" * len(header))
    for name in names:
        row = f"{name:<{width}}"
        for b in best:
            row += f"  {best[b][name]:>9.3f}s"
        print(row)
    if len(best) == 2:
        a, b = best.values()
        print()
        for name in names:
            print(f"{name:<{width}}  speedup x{b[name] / a[name]:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
