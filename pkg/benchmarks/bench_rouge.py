"""Benchmark the ROUGE-L LCS kernel: compiled extension vs pure Python.

The LCS dynamic program is O(len(candidate) * len(reference)) per pair and
dominates accuracy evaluation on runs with long generations, which is why a
compiled variant exists. This script scores identical synthetic corpora on
both backends and reports pairs/s.

    python benchmarks/bench_rouge.py --pairs 200 --tokens 580
"""

from __future__ import annotations

import argparse
import random
import time

from flexbench.accuracy import _native

try:
    from flexbench.accuracy import _speedups
except ImportError:
    _speedups = None


def synthetic_corpus(pairs: int, tokens: int, vocab: int, seed: int):
    rng = random.Random(seed)
    out = []
    for _ in range(pairs):
        cand = [rng.randrange(vocab) for _ in range(tokens)]
        ref = [rng.randrange(vocab) for _ in range(int(tokens * rng.uniform(0.7, 1.3)))]
        out.append((cand, ref))
    return out


def run(kernel, corpus) -> tuple[float, int]:
    start = time.perf_counter()
    checksum = 0
    for cand, ref in corpus:
        checksum += kernel.lcs_length(cand, ref)
    return time.perf_counter() - start, checksum


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=200)
    parser.add_argument("--tokens", type=int, default=580,
                        help="mean tokens per side (long-generation regime)")
    parser.add_argument("--vocab", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    corpus = synthetic_corpus(args.pairs, args.tokens, args.vocab, args.seed)
    print(f"{args.pairs} pairs, ~{args.tokens} tokens/side, vocab {args.vocab}")

    py_time, py_sum = run(_native, corpus)
    print(f"python : {py_time:8.3f} s  ({args.pairs / py_time:8.1f} pairs/s)")

    if _speedups is None:
        print("cython : not built (pip install -e . --no-build-isolation)")
        return
    cy_time, cy_sum = run(_speedups, corpus)
    print(f"cython : {cy_time:8.3f} s  ({args.pairs / cy_time:8.1f} pairs/s)")
    assert py_sum == cy_sum, "backends disagree"
    print(f"speedup: {py_time / cy_time:8.1f}x  (checksum {cy_sum})")


if __name__ == "__main__":
    main()
