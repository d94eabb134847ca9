"""Builds the compiled kernel when Cython and a C compiler are available.

Without them the package installs with the pure-Python kernels only.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("GOVKERNEL_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("govkernel._kernel", ["src/govkernel/_kernel.pyx"])],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
