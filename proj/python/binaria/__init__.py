"""Rotating single- and binary-star equilibria with property audits."""

from ._binaria import *  # noqa: F401,F403
from ._binaria import __doc__  # noqa: F401

__version__ = "0.1.0"
