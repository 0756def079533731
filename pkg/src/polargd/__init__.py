"""Generalized decoding of polar-like codes."""
from ._backend import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND"]
