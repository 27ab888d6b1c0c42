"""Weighted compressive spectrum sensing for block-heterogeneous wideband spectrum."""

__version__ = "0.1.0"
