"""Grounded instruction following and generation with pragmatic reranking."""

__version__ = "0.1.0"
