"""Numerics for the extended Harper's model: duality, cocycles, spectra and the
continued-fraction and Birkhoff-sum tools behind them."""

__version__ = "0.1.0"

from ._util import NumericalContractError  # noqa: E402,F401
