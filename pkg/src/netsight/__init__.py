"""Passive network situational awareness from packet captures."""

__version__ = "0.1.0"
