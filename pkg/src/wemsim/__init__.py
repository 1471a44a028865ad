"""Deterministic simulator and head-end for a wireless energy-metering network."""

__version__ = "0.1.0"
