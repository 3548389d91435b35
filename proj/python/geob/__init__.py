"""Rotating artificial-compressibility solver, limit solvers and eps-sweep studies."""

from ._geob import *  # noqa: F401,F403
from ._geob import __doc__  # noqa: F401

__version__ = "0.1.0"
