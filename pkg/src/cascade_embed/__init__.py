"""Latent-community embeddings learned from cascade infection times."""

__version__ = "0.1.0"
