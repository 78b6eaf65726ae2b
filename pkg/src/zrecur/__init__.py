"""Recurrence of Z-extensions over Gibbs-Markov shifts and a random-walk toy model."""

from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
