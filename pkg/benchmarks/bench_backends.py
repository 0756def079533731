"""Time the compiled and pure-Python SCL kernels on random channel outputs.

Usage: ``python benchmarks/bench_backends.py [--frames 200]``. Prints
microseconds per frame for each kernel and the speedup.
"""
import argparse
import time

import numpy as np

from polargd._backend import KERNELS
from polargd.channel import ChannelParams, channel_llrs, modulate, transmit
from polargd.construction import encode, make_code
from polargd.scl import decode_scl_batch

CASES = [("rm:4,2", 2), ("rm:5,3", 4), ("rm:6,3", 4), ("rm:6,3", 16), ("rm:7,4", 8)]


def frames(code: str, B: int, ebn0_db: float, seed: int):
    spec = make_code(code, "convolutional")
    rng = np.random.default_rng(seed)
    c = encode(rng.integers(0, 2, (B, spec.K), dtype=np.uint8), spec)
    p = ChannelParams(ebn0_db, spec.K / spec.N)
    return spec, channel_llrs(transmit(modulate(c), p, rng), p)


def time_kernel(llrs, spec, L, backend, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        decode_scl_batch(llrs, spec, L, backend)
        best = min(best, time.perf_counter() - t0)
    return 1e6 * best / len(llrs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--ebn0-db", type=float, default=3.0)
    args = ap.parse_args(argv)
    names = [k for k in ("compiled", "python") if k in KERNELS]
    print(f"{'code':>8} {'N':>4} {'L':>3} " + " ".join(f"{n + ' us':>12}" for n in names) + "  speedup")
    for code, L in CASES:
        spec, llrs = frames(code, args.frames, args.ebn0_db, 0)
        us = {n: time_kernel(llrs if n == "compiled" else llrs[: max(10, args.frames // 10)], spec, L, n)
              for n in names}
        ratio = us["python"] / us["compiled"] if len(us) == 2 else float("nan")
        print(f"{code:>8} {spec.N:>4} {L:>3} " + " ".join(f"{us[n]:12.1f}" for n in names) + f"  {ratio:7.1f}x")


if __name__ == "__main__":
    main()
