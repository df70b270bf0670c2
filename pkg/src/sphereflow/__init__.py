"""Geometry, metrics, statistics and loss numerics for 360-degree optical flow."""

__version__ = "0.1.0"
