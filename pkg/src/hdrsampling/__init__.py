"""Uniform sampling in highest density regions, surrogate training and
reliability benchmarking."""
from .randvec import GaussianCopula, Marginal, RandomVector

__version__ = "0.1.0"

__all__ = ["GaussianCopula", "Marginal", "RandomVector", "__version__"]
