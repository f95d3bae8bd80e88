"""Build script for the optional compiled Monte Carlo kernel.

The package works without the extension (a NumPy fallback is selected at
import time); building it makes the small-system ensemble runs several
times faster.
"""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "opgrowth.mc._kernel",
                ["src/opgrowth/mc/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-DNPY_NO_DEPRECATED_API=NPY_1_7_API_VERSION"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
