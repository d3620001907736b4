"""Spectra prediction and candidate ranking engine for metabolite annotation."""

__version__ = "0.1.0"
