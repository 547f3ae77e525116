import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the pure-Python kernel is used
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("WQED_NO_EXTENSION", "") in ("", "0"):
    ext_modules = cythonize(
        [
            Extension(
                "wqed._propagate",
                ["src/wqed/_propagate.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
