"""Build the compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), but the compiled kernels are what make the voxel pipeline
linear-time in practice.  Recompile in place with:

    python setup.py build_ext --inplace
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "havs._kernels_cy",
        ["src/havs/_kernels_cy.pyx"],
        include_dirs=[np.get_include()],
        # no -march/-ffast-math: kernel results must be bit-identical to the
        # NumPy backend, so IEEE semantics (and no FMA contraction) are required
        extra_compile_args=["-O3", "-ffp-contract=off", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
    if cythonize is not None
    else [],
)
