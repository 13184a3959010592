"""Benchmark of the numba-accelerated kernels against the numpy fallback.

``python -m gupopt.benchmark`` times the matrix exponential, the oracle
mean-field evaluation, the cavity-filter quadrature and the bath Monte Carlo
reduction on the current backend; with ``--compare`` the same suite is rerun
in a subprocess with ``GUPOPT_NO_NUMBA=1`` and both columns are printed.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _time(fn, repeats=3):
    fn()  # warm-up (includes JIT compilation on the numba path)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_suite():
    from . import _kernels
    from ._accel import HAVE_NUMBA
    from .noise import PulseShape, bath_monte_carlo, intracavity_zeta
    from .protocol import mean_field_numeric

    rng = np.random.default_rng(7)
    results = {"backend": "numba" if HAVE_NUMBA else "numpy"}

    for dim in (64, 192):
        h = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = np.ascontiguousarray(0.05 * (h + h.conj().T))
        results[f"expm_{dim}"] = _time(lambda: _kernels.expm(h))

    results["oracle_a2_l03"] = _time(lambda: mean_field_numeric(2.0, 1.0, 0.3), repeats=2)

    pulse = PulseShape.square(1.0)
    results["zeta_ktau100"] = _time(lambda: intracavity_zeta(pulse, 100.0), repeats=2)

    results["bath_mc_2e4"] = _time(
        lambda: bath_monte_carlo(1.0, 0.1, 2 * np.pi * 1e5, 1e6, 20000, 42), repeats=2
    )
    return results


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gupopt-benchmark", description=__doc__)
    parser.add_argument("--compare", action="store_true", help="also run the numpy fallback and compare")
    parser.add_argument("--json", action="store_true", help="emit raw JSON")
    args = parser.parse_args(argv)

    mine = run_suite()
    other = None
    if args.compare:
        env = dict(os.environ)
        if mine["backend"] == "numba":
            env["GUPOPT_NO_NUMBA"] = "1"
        else:
            env.pop("GUPOPT_NO_NUMBA", None)
        out = subprocess.run(
            [sys.executable, "-m", "gupopt.benchmark", "--json"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        other = json.loads(out.stdout)

    if args.json:
        print(json.dumps(mine))
        return 0

    names = [k for k in mine if k != "backend"]
    if other is None:
        print(f"backend: {mine['backend']}")
        for name in names:
            print(f"{name:>16s}: {mine[name] * 1e3:9.2f} ms")
    else:
        print(f"{'kernel':>16s} {mine['backend']:>12s} {other['backend']:>12s} {'speedup':>9s}")
        for name in names:
            ratio = other[name] / mine[name]
            print(f"{name:>16s} {mine[name] * 1e3:9.2f} ms {other[name] * 1e3:9.2f} ms {ratio:8.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
