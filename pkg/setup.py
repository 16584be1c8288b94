"""Builds the optional compiled kernel extension.

The package works without it: freqforest.kernels falls back to a NumPy
implementation when the extension is missing or fails to import.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "freqforest._kernels",
        ["src/freqforest/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
    for mod in ext_modules:
        mod.optional = True

setup(ext_modules=ext_modules)
