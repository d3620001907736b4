"""Builds the optional compiled Gibbs-sweep kernel.

The package works without it (a pure-Python kernel is selected at import
time); the extension only speeds up topic-model fitting on large corpora.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "esp.lda._gibbs",
                ["src/esp/lda/_gibbs.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
