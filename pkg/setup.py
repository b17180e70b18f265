"""Build hook for the optional Cython kernel.

The package works without the compiled module: ``fugseg._kernels`` falls back
to the pure-Python implementation when ``_core`` cannot be imported.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FUGSEG_NO_EXT") != "1":
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "fugseg._kernels._core",
            ["src/fugseg/_kernels/_core.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
