"""Discrete-event simulator and experiment harness for assured-forwarding
traffic over a GEO satellite bottleneck."""

__version__ = "0.1.0"
