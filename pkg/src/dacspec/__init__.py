"""Pressure metrology for diamond anvil cells from color-center photoluminescence."""

__version__ = "0.1.0"
