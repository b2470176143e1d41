from flexbench.accuracy.metrics import (
    KERNEL_BACKEND,
    AccuracyReport,
    evaluate_run,
    rouge_l,
    rouge_n,
    score_pair,
    tokenize,
)

__all__ = [
    "KERNEL_BACKEND",
    "AccuracyReport",
    "evaluate_run",
    "rouge_l",
    "rouge_n",
    "score_pair",
    "tokenize",
]
