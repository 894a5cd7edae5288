"""Sustained-drop detection for periodic time series."""

from ._core import *  # noqa: F401,F403
from ._core import Error, NumericError, ParseError  # noqa: F401

__version__ = "0.1.0"
