# backend/core/normbound/__init__.py
"""Worst-case deviation of a distribution from the normal c.d.f. at zero
under normal moment constraints."""

__version__ = "0.1.0"
