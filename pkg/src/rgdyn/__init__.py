"""Dynamics of the time-dependent spin-s Richardson-Gaudin model."""

__version__ = "0.1.0"
