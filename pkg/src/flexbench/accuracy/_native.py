"""Pure-Python accuracy kernels.

Fallback twin of ``_speedups.pyx``; same signatures, same results. The LCS
dynamic program is the hot loop of ROUGE-L scoring (O(len(a)*len(b)) per
candidate/reference pair), which is why a compiled variant exists at all.
"""

from __future__ import annotations

from collections.abc import Sequence

BACKEND = "python"


def lcs_length(a: Sequence[int], b: Sequence[int]) -> int:
    """Length of the longest common subsequence of two token-id sequences."""
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    # Two-row DP keyed on the shorter sequence.
    prev = [0] * (len(b) + 1)
    curr = [0] * (len(b) + 1)
    for x in a:
        for j, y in enumerate(b, start=1):
            if x == y:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = curr[j - 1] if curr[j - 1] >= prev[j] else prev[j]
        prev, curr = curr, prev
    return prev[len(b)]
