"""Build the optional compiled kernels; the package falls back to numpy without them."""

import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FXIP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        omp = [] if os.environ.get("FXIP_NO_OPENMP") == "1" else ["-fopenmp"]
        ext = Extension(
            "fxip._kernels",
            ["src/fxip/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"] + omp,
            extra_link_args=omp,
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
