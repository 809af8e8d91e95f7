"""Compare the compiled and pure-Python component kernels on the greedy marking workload.

Usage: python benchmarks/bench_kernels.py [--sizes 64,256,1024] [--repeat 3]
"""
from __future__ import annotations

import argparse
import timeit

from twlimit import _kernels_py
from twlimit import kernels
from twlimit.families import binary_in_tree, rooted_path


def _load_compiled():
    try:
        from twlimit import _kernels
    except ImportError:
        return None
    return _kernels


def workload(mod, indptr, indices, n):
    removed = bytearray(n)
    removed[n // 2] = 1
    mod.component_sizes(indptr, indices, removed)
    cands = [v for v in range(n) if not removed[v]]
    return mod.largest_after_removal(indptr, indices, removed, cands)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="64,256,1024")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled = _load_compiled()
    print(f"selected backend: {kernels.BACKEND}")
    if compiled is None:
        print("compiled extension not built; only the Python timings are shown")
    print(f"{'graph':>16} {'python s':>10} {'compiled s':>11} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        height = max(n.bit_length() - 1, 1)
        for name, T in ((f"path{n}", rooted_path(n)), (f"bintree{height}", binary_in_tree(height - 1))):
            indptr, indices = kernels.csr(T.neighbors)
            py = min(timeit.repeat(lambda: workload(_kernels_py, indptr, indices, T.n), number=1, repeat=args.repeat))
            if compiled is not None:
                assert workload(compiled, indptr, indices, T.n) == workload(_kernels_py, indptr, indices, T.n)
                c = min(timeit.repeat(lambda: workload(compiled, indptr, indices, T.n), number=1, repeat=args.repeat))
                print(f"{name:>16} {py:10.4f} {c:11.5f} {py / c:7.1f}x")
            else:
                print(f"{name:>16} {py:10.4f} {'-':>11} {'-':>8}")


if __name__ == "__main__":
    main()
