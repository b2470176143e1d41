"""Desk-scale LLM inference benchmarking harness.

Load generation (Offline and Server scenarios), streaming metric capture,
a deterministic simulation server for GPU-free validation, an open result
dataset with feature engineering, and a cost-efficiency predictor.
"""

__version__ = "0.1.0"
