"""Build hook: compile the optional Cython kernel, tolerating failure.

The package works without the extension (pure numpy/scipy fallback is
selected at import time), so any build problem here must not block an
install.  Set FF_NO_EXT=1 to skip the extension on purpose.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FF_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext = Extension(
            "floquet_forge._kernels_cy",
            sources=["src/floquet_forge/_kernels_cy.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [ext],
            language_level=3,
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception:
        ext_modules = []

setup(ext_modules=ext_modules)
