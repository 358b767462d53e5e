"""Time the compiled and numpy kernels on phantom-sized inputs.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--json FILE]
"""
import argparse
import json
import math
import timeit

import numpy as np

from thermoscan import kernels
from thermoscan.synthgen import Nodule, generate_phantom, neck_phantom


def cases(frame, moved):
    c, s = math.cos(math.radians(1.3)), math.sin(math.radians(1.3))
    roi = frame[120:430, 75:405]
    return {
        "valley_filter 480x480": lambda k: k.valley_filter(frame, 4, 40, False, True, False),
        "asymmetry_sum 310x330": lambda k: k.asymmetry_sum(roi),
        "warp bilinear 480x480": lambda k: k.warp(moved, c, s, 3.2, -2.7, True, 0.0),
        "warp nearest 480x480": lambda k: k.warp(moved, c, s, 3.2, -2.7, False, 0.0),
        "warp_abs_diff 330x310": lambda k: k.warp_abs_diff(frame, moved, c, s, 3.2, -2.7, 75, 120, 330, 310),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing rounds; the best one is kept")
    parser.add_argument("--json", help="also write the results to this file")
    args = parser.parse_args(argv)

    spec = neck_phantom(Nodule((300, 260), 45, 250, 14), jitter=((0, 0, 0), (0.02, 3, -2)), noise_sigma=2, seed=1)
    frame, moved = (np.ascontiguousarray(f.pixels) for f in generate_phantom(spec))
    backends = kernels.backends()
    results = {}
    print(f"{'kernel':24s}" + "".join(f"{name:>12s}" for name in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, fn in cases(frame, moved).items():
        row = {}
        for name, module in backends.items():
            number = 3
            best = min(timeit.repeat(lambda: fn(module), number=number, repeat=args.repeat)) / number
            row[name] = best
        results[label] = row
        line = f"{label:24s}" + "".join(f"{row[n] * 1e3:10.2f}ms" for n in backends)
        if "cython" in row:
            line += f"{row['python'] / row['cython']:11.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"active_backend": kernels.BACKEND, "seconds": results}, fh, indent=2)


if __name__ == "__main__":
    main()
