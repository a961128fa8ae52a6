"""Latency-constrained architecture search over per-layer lookup tables."""

from ._lana import *  # noqa: F401,F403
from ._lana import __doc__  # noqa: F401

__version__ = "0.1.0"
