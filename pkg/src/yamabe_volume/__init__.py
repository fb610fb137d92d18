"""Singular Yamabe metrics and renormalized volume near submanifolds."""

__version__ = "0.1.0"
