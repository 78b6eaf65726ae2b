import os

import numpy as np
from setuptools import Extension, setup

# ZRECUR_NO_EXT=1 skips the compiled core; the package then runs on the numpy fallback.
if os.environ.get("ZRECUR_NO_EXT"):
    ext_modules = []
else:
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "zrecur._kernels",
            ["src/zrecur/_kernels.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
