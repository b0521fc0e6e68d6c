"""Compare the numba and numpy alcove-expansion kernels.

Two measurements per case: the raw ``expand`` kernel on a frontier batch
taken from a real walk, and the full alcove enumeration.  Both backends
must produce identical alcove sets; the script exits non-zero otherwise.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--case E8:12 ...]
"""
import argparse
import sys
import time

import numpy as np

from springdim import kernels
from springdim.apartment import Apartment, make_slope
from springdim.rootdata import GroupSpec, build_root_datum

DEFAULT_CASES = ["G2:2", "2A4:2", "F4:3", "E6:3", "E8:12"]


def frontier(ap, size):
    alc = ap.enumerate()
    pick = alc[:size] if len(alc) >= size else (alc * (size // len(alc) + 1))[:size]
    W = np.stack([a.linear for a in pick])
    T = np.stack([a.translation for a in pick])
    return W, T, alc


def time_expand(ap, W, T, which, repeat):
    args = (W, T, ap.SB, ap.C, ap.A, ap.n0, ap.nu_lin, ap.nu_off, ap.wall_lin, ap.wall_off)
    kernels.expand(*args, which=which)  # warm up (numba compiles or loads its cache)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        kernels.expand(*args, which=which)
        best = min(best, time.perf_counter() - t)
    return best


def time_enumerate(datum, slope, which, repeat):
    best, keys = float("inf"), None
    for _ in range(repeat):
        ap = Apartment(datum, slope)
        t = time.perf_counter()
        alc = ap.enumerate(which=which)
        best = min(best, time.perf_counter() - t)
        keys = sorted(a.key for a in alc)
    return best, keys


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--case", action="append", help="TYPE:m, repeatable")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--batch", type=int, default=4096)
    args = p.parse_args(argv)
    if not kernels.HAVE_NUMBA:
        print("numba is not importable; nothing to compare")
        return 0
    ok = True
    print(f"{'case':<8} {'alcoves':>8} {'expand numpy':>13} {'expand numba':>13} {'speedup':>8} "
          f"{'walk numpy':>11} {'walk numba':>11} {'speedup':>8}")
    for case in args.case or DEFAULT_CASES:
        label, m = case.split(":")
        datum = build_root_datum(GroupSpec.parse(label))
        slope = make_slope(datum, 1, int(m))
        ap = Apartment(datum, slope)
        W, T, alc = frontier(ap, args.batch)
        e_np = time_expand(ap, W, T, "numpy", args.repeat)
        e_nb = time_expand(ap, W, T, "numba", args.repeat)
        w_np, k_np = time_enumerate(datum, slope, "numpy", args.repeat)
        w_nb, k_nb = time_enumerate(datum, slope, "numba", args.repeat)
        same = k_np == k_nb
        ok &= same
        print(f"{case:<8} {len(alc):>8} {e_np * 1e3:>11.2f}ms {e_nb * 1e3:>11.2f}ms {e_np / e_nb:>7.1f}x "
              f"{w_np:>10.3f}s {w_nb:>10.3f}s {w_np / w_nb:>7.1f}x" + ("" if same else "  MISMATCH"))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
