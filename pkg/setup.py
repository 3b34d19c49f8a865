import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the fallback kernel is used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("RESTRICTION_LAB_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "restriction_lab._kernels",
                ["src/restriction_lab/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3", "-fopenmp", "-fno-fast-math"],
                extra_link_args=["-fopenmp"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
