"""Semantic program embeddings learned from execution traces, plus trace-guided repair."""

__version__ = "0.1.0"
