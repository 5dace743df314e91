"""Build hooks for the optional compiled kernel extension.

The package is pure Python by default; if Cython and a C toolchain are
available the hot kernels (placement objective, timing objective, channel
router search) are compiled into aqflow.kernels._core.  When the build is
not possible the package falls back to the numpy/python implementations at
import time, so a failed extension build is downgraded to a warning rather
than a fatal error.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "aqflow.kernels._core",
                ["src/aqflow/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on build host
    sys.stderr.write(f"aqflow: skipping compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
