"""Active-learning laboratory: synthetic data generation, a future-peek
expert simulator, a behavior-cloned listwise ranking strategy, and a
statistically grounded benchmark harness."""

__version__ = "0.1.0"
