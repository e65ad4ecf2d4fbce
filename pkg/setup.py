"""Build script: compiles the optional Cython decoding kernel.

The package is fully functional without the compiled extension (a NumPy
backend is selected at import time); the extension exists to make the
Monte-Carlo experiment runs fast.  Any failure here degrades the install
to the pure-Python backend rather than aborting it.
"""

import os

from setuptools import setup

ext_modules = []
pyx = os.path.join("src", "pcdsim", "kernels", "_core.pyx")
if os.path.exists(pyx):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [pyx],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
            annotate=False,
        )
        for ext in ext_modules:
            ext.include_dirs.append(numpy.get_include())
            ext.optional = True  # compile failure -> pure-Python fallback
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
