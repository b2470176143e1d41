"""Independent reference implementations used to check the real ones.

Deliberately naive: exhaustive subsequence enumeration for LCS and a
counting-based nearest-rank percentile. Keep these free of any code from
the package under test.
"""

from itertools import combinations


def all_subsequences(seq: tuple) -> set[tuple]:
    subs: set[tuple] = set()
    for r in range(len(seq) + 1):
        subs.update(combinations(seq, r))
    return subs


def brute_lcs(a: tuple, b: tuple) -> int:
    """Longest common subsequence length via exhaustive enumeration."""
    common = all_subsequences(a) & all_subsequences(b)
    return max(len(s) for s in common)


def brute_lcs_f1(a: tuple, b: tuple) -> float:
    if not a or not b:
        return 0.0
    lcs = brute_lcs(a, b)
    p = lcs / len(a)
    r = lcs / len(b)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def brute_nearest_rank(values: list[float], p: float) -> float:
    """Smallest sample element v such that at least p% of the sample is <= v."""
    ordered = sorted(values)
    need = p / 100.0 * len(ordered)
    count = 0
    for v in ordered:
        count += 1
        if count >= need:
            return v
    return ordered[-1]
