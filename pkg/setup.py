"""Build script for the optional compiled numerics core.

The package is fully functional without the extension; kgopt._kernels
falls back to the NumPy implementation when the compiled module is
missing. A failed compile therefore downgrades the install instead of
breaking it.
"""

import logging

from setuptools import Extension, setup

log = logging.getLogger("kgopt.setup")


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError as exc:
        log.warning("compiled core skipped (%s); pure NumPy backend will be used", exc)
        return []
    ext = Extension(
        "kgopt._kernels._fast",
        sources=["src/kgopt/_kernels/_fast.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
