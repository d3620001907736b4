"""Spectral topic modeling via collapsed Gibbs sampling.

The sweep kernel is compiled (Cython) when the extension built, with a
pure-Python fallback selected at import time. Both produce bit-identical
chains; see benchmarks/bench_gibbs.py for the speed comparison.
"""

from . import _gibbs_py

try:
    from . import _gibbs as _kernel

    HAVE_COMPILED_KERNEL = True
except ImportError:
    _kernel = _gibbs_py
    HAVE_COMPILED_KERNEL = False

KERNEL_NAME = _kernel.KERNEL_NAME

from .model import (
    EmptyVocabulary,
    TooFewDocuments,
    TopicModel,
    fit_lda,
    transform,
)

__all__ = [
    "EmptyVocabulary",
    "HAVE_COMPILED_KERNEL",
    "KERNEL_NAME",
    "TooFewDocuments",
    "TopicModel",
    "fit_lda",
    "transform",
]
