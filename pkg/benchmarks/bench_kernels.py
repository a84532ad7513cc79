#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--iters N] [--tokens N]
"""

import argparse
import random
import time

from simpmine._kernels import pure

try:
    from simpmine._kernels import _speedups
except ImportError:
    _speedups = None


def bench(fn, args_list, iters):
    start = time.perf_counter()
    for _ in range(iters):
        for args in args_list:
            fn(*args)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=20)
    parser.add_argument("--tokens", type=int, default=30,
                        help="tokens per sentence in the SARI workload")
    parser.add_argument("--cases", type=int, default=200)
    args = parser.parse_args()

    rng = random.Random(12345)
    vocab = 400

    sari_cases = []
    for _ in range(args.cases):
        src = [rng.randrange(vocab) for _ in range(args.tokens)]
        out = [rng.randrange(vocab) for _ in range(int(args.tokens * 0.8))]
        refs = [[rng.randrange(vocab) for _ in range(int(args.tokens * 0.8))]
                for _ in range(2)]
        sari_cases.append((src, out, refs))

    words = ["alpha", "beta", "gamma", "delta", "market", "report",
             "extraordinary", "legislation", "infrastructure"]
    tri_cases = []
    for _ in range(args.cases):
        text = " ".join(rng.choice(words) for _ in range(14))
        tri_cases.append((text.encode("utf-32-le"), 256))

    print(f"workload: {args.cases} cases x {args.iters} iters "
          f"({args.tokens} tokens/sentence)")
    print(f"{'kernel':<22} {'pure':>10} {'compiled':>10} {'speedup':>8}")

    for name, fn_name, cases in (
            ("sari_ngram_stats", "sari_ngram_stats", sari_cases),
            ("trigram_histogram", "trigram_histogram", tri_cases)):
        t_pure = bench(getattr(pure, fn_name), cases, args.iters)
        if _speedups is None:
            print(f"{name:<22} {t_pure:>9.3f}s {'n/a':>10} {'n/a':>8}")
            continue
        t_ext = bench(getattr(_speedups, fn_name), cases, args.iters)
        print(f"{name:<22} {t_pure:>9.3f}s {t_ext:>9.3f}s {t_pure / t_ext:>7.1f}x")

    if _speedups is None:
        print("\ncompiled extension not built; only the pure backend was timed")


if __name__ == "__main__":
    main()
