"""ROUGE-1/2/L and tokens-per-sample scoring for benchmark outputs.

Scores are plain F1 over lowercased alphanumeric tokens: no stemming, no
sentence splitting. The ROUGE-L longest-common-subsequence kernel runs on
the compiled extension when it is importable and on a pure-Python twin
otherwise; set ``FLEXBENCH_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os
import re
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from flexbench.accuracy import _native

if os.environ.get("FLEXBENCH_PURE_PYTHON"):
    _kernels = _native
else:
    try:
        from flexbench.accuracy import _speedups as _kernels  # type: ignore[no-redef]
    except ImportError:
        _kernels = _native

KERNEL_BACKEND: str = _kernels.BACKEND

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class AccuracyReport:
    """Run-level accuracy summary; ROUGE values are F1 scaled to [0, 100]."""

    rouge1: float
    rouge2: float
    rougeL: float
    tokens_per_sample: float

    def as_text(self) -> str:
        """Single-line form used in the dataset's metrics.accuracy field."""
        return (
            f"ROUGE1: {self.rouge1:.4f}  ROUGE2: {self.rouge2:.4f}  "
            f"ROUGEL: {self.rougeL:.4f} TOKENS_PER_SAMPLE: {self.tokens_per_sample:.1f}"
        )


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


def _f1(overlap: float, n_candidate: int, n_reference: int) -> float:
    if n_candidate == 0 or n_reference == 0:
        return 0.0
    precision = overlap / n_candidate
    recall = overlap / n_reference
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    """Clipped n-gram overlap F1 in [0, 1]; 0 when either side has no n-grams."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    cand_grams = Counter(tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1))
    ref_grams = Counter(tuple(reference[i : i + n]) for i in range(len(reference) - n + 1))
    overlap = sum((cand_grams & ref_grams).values())
    return _f1(overlap, sum(cand_grams.values()), sum(ref_grams.values()))


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Longest-common-subsequence F1 in [0, 1]."""
    if not candidate or not reference:
        return 0.0
    # Interning tokens to small ints keeps the DP kernel allocation-free.
    ids: dict[str, int] = {}
    cand_ids = [ids.setdefault(tok, len(ids)) for tok in candidate]
    ref_ids = [ids.setdefault(tok, len(ids)) for tok in reference]
    lcs = _kernels.lcs_length(cand_ids, ref_ids)
    return _f1(lcs, len(candidate), len(reference))


def score_pair(candidate_text: str, reference_text: str) -> tuple[float, float, float]:
    """(rouge1, rouge2, rougeL) F1 for one candidate/reference text pair."""
    cand = tokenize(candidate_text)
    ref = tokenize(reference_text)
    return rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)


def evaluate_run(
    outputs: Sequence[str],
    references: Sequence[str],
    output_tokens: Iterable[int],
) -> AccuracyReport:
    """Average per-pair ROUGE F1 (scaled x100) and mean output token count.

    ``outputs`` and ``references`` pair up positionally and must have equal
    length; ``output_tokens`` are the measured generation lengths.
    """
    if len(outputs) != len(references):
        raise ValueError(
            f"cannot pair {len(outputs)} outputs with {len(references)} references"
        )
    if not outputs:
        raise ValueError("cannot evaluate an empty run")
    scores = [score_pair(out, ref) for out, ref in zip(outputs, references)]
    n = len(scores)
    token_counts = list(output_tokens)
    return AccuracyReport(
        rouge1=100.0 * sum(s[0] for s in scores) / n,
        rouge2=100.0 * sum(s[1] for s in scores) / n,
        rougeL=100.0 * sum(s[2] for s in scores) / n,
        tokens_per_sample=sum(token_counts) / len(token_counts) if token_counts else 0.0,
    )
