"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Workloads match one training set: 480 epochs of 16 x 10 theta/alpha
features through a 76-channel bank, and outlier repair over a
12-minute 128 Hz channel.
"""
import argparse
import json
import timeit

import numpy as np

from scvcnet.backend import available_backends


def workloads(rng):
    X = rng.random((480, 16, 10))
    Y = rng.random((480, 16, 10))
    W = rng.uniform(-0.27, 0.27, (76, 16, 16, 3, 3))
    b = rng.uniform(-0.27, 0.27, 76)
    sig = np.cumsum(rng.normal(size=92160))
    sig[rng.choice(sig.size, 50, replace=False)] += 400.0
    x, y, w = rng.random(16), rng.random(16), rng.normal(size=(3, 3))
    return {
        "ifpfi N=480 c=76 p=q=16": lambda k: k.ifpfi(X, Y, W, b, 1, True),
        "repair_outliers 92k samples": lambda k: k.repair_outliers(sig, 5.0),
        "scvc m=n=16 d=3": lambda k: k.scvc(x, y, w, 1, True),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    backends = available_backends()
    rng = np.random.default_rng(0)
    rows = []
    for name, fn in workloads(rng).items():
        best = {}
        outs = {}
        for bname, mod in sorted(backends.items()):
            outs[bname] = fn(mod)
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            best[bname] = min(timer.repeat(args.repeat, number)) / number
        ref = outs.get("python")
        ref = ref[0] if isinstance(ref, tuple) else ref
        gap = max(float(np.max(np.abs((o[0] if isinstance(o, tuple) else o) - ref)))
                  for o in outs.values())
        rows.append({"kernel": name, "seconds": best, "max_abs_diff": gap})
    names = sorted(backends)
    print(f"{'kernel':<30}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}{'max diff':>11}")
    for r in rows:
        s = r["seconds"]
        speed = s["python"] / s["cython"] if "cython" in s else float("nan")
        print(f"{r['kernel']:<30}" + "".join(f"{s[n] * 1e3:>10.3f}ms" for n in names)
              + f"{speed:>9.1f}x{r['max_abs_diff']:>11.1e}")
    if "cython" not in backends:
        print("compiled extension not built; only the Python fallback was timed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
