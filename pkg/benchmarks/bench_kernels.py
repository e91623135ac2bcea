"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py            # per-kernel timings
    python benchmarks/bench_kernels.py --e2e      # also one embed+features run per backend

Per-kernel numbers call both implementations directly. The end-to-end run
spawns a fresh interpreter per backend with ASEDGAME_DISABLE_NUMBA set
accordingly, since the backend is fixed at import time.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from asedgame import _kernels_numba as nb
from asedgame import _kernels_numpy as npk
from asedgame.detector import FILTERS

E2E = """
import time, numpy as np
from asedgame import detector as det, stego, kernels
rng = np.random.default_rng(0)
covers = [stego.synthetic_cover(rng, (64, 64)) for _ in range(40)]
model = det.DetectorModel(rng.normal(size=8), 0.0, det.DEFAULT_BANK, np.full(8, 20.0), np.full(8, 5.0))
stego.p_adv_emb(covers[0], 0.3, 1638, model, rng)  # warm-up / jit
t = time.perf_counter()
imgs = [stego.p_adv_emb(c, 0.3, 1638, model, rng) for c in covers]
det.batch_features(det.DEFAULT_BANK, imgs)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def cases(rng):
    img = rng.uniform(0, 255, (64, 64))
    kv = np.ascontiguousarray(FILTERS["kv"])
    resp = rng.normal(size=(60, 60))
    rp, rm = rng.uniform(0.05, 20, 4096), rng.uniform(0.05, 20, 4096)
    tab = rng.normal(size=(23, 45))
    return {
        "correlate_valid 64x64 * 5x5": lambda m: m.correlate_valid(img, kv),
        "correlate_valid_adjoint 60x60": lambda m: m.correlate_valid_adjoint(resp, kv, (64, 64)),
        "ternary_probs n=4096": lambda m: m.ternary_probs(0.7, rp, rm),
        "ternary_entropy n=4096": lambda m: m.ternary_entropy(0.7, rp, rm),
        "pivot 23x45": lambda m: m.pivot(tab.copy(), 3, 7),
    }


def best_of(fn, number, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--number", type=int, default=200)
    ap.add_argument("--e2e", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':<32}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for name, call in cases(rng).items():
        call(nb)  # compile outside the timed region
        t_np = best_of(lambda: call(npk), args.number)
        t_nb = best_of(lambda: call(nb), args.number)
        print(f"{name:<32}{1e6 * t_np:>12.1f}{1e6 * t_nb:>12.1f}{t_np / t_nb:>9.1f}x")

    if args.e2e:
        print("\nend to end: 40 P-ADV-EMB stegos (64x64, beta 0.3) + features")
        for flag in ("0", "1"):
            env = dict(os.environ, ASEDGAME_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
            backend, secs = out.stdout.split()
            print(f"  {backend:<6} {float(secs):.2f} s")


if __name__ == "__main__":
    main()
