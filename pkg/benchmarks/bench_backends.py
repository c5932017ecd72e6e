"""Time the compiled and pure-Python estimator kernels on the same inputs.

Usage::

    python benchmarks/bench_backends.py [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from multitone.estimator import EstimatorConfig, available_backends, estimate
from multitone.signal import Scenario, Tone, synthesize, table2_scenario, two_tone_scenario

CASES = {
    "two-tone N=64 Q=2": (lambda: two_tone_scenario(0.1, 5, 64, snr_db=20), 2),
    "two-tone N=1024 Q=3": (lambda: two_tone_scenario(0.1, 5, 1024, snr_db=20), 3),
    "15-tone N=64 Q=3": (lambda: table2_scenario(64, 30.0), 3),
    "8-tone N=512 Q=3": (lambda: Scenario(tuple(Tone(1, k / 8 + 0.013) for k in range(-4, 4)),
                                          512, 0.01), 3),
}


def time_case(buffer, config, backend, repeat):
    number = 1
    while True:
        t = timeit.timeit(lambda: estimate(buffer, config, backend=backend), number=number)
        if t > 0.2:
            break
        number *= 4
    runs = timeit.repeat(lambda: estimate(buffer, config, backend=backend),
                         number=number, repeat=repeat)
    return min(runs) / number


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json")
    args = parser.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only timing the Python kernels", file=sys.stderr)
    rows = []
    print(f"{'case':<22}" + "".join(f"{b + ' [us]':>16}" for b in backends) + f"{'speedup':>10}")
    for name, (make, q) in CASES.items():
        sc = make()
        buf = synthesize(sc, 1)
        config = EstimatorConfig(sc.num_components, q)
        times = {b: time_case(buf, config, b, args.repeat) for b in backends}
        ref = estimate(buf, config, backend=backends[-1]).frequencies
        for b in backends:
            assert np.allclose(estimate(buf, config, backend=b).frequencies, ref, atol=1e-12)
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        rows.append({"case": name, **{f"{b}_us": times[b] * 1e6 for b in backends},
                     "speedup": speedup})
        print(f"{name:<22}" + "".join(f"{times[b] * 1e6:16.1f}" for b in backends)
              + f"{speedup:10.1f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
