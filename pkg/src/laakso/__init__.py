"""Exact computational laboratory for the Laakso space F = (I x K)/~."""

__version__ = "0.1.0"
