"""Build script for the compiled scan kernels.

The extension is optional: if Cython or a C compiler is missing the install
still succeeds and the package falls back to the NumPy implementations at
import time.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Try to build the extension, warn and continue on failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, header issues, ...
            warnings.warn(f"skipping compiled kernels ({exc}); "
                          "vsforecast will use the NumPy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"failed to build {ext.name} ({exc}); "
                          "vsforecast will use the NumPy fallback")


def extension_modules():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "vsforecast._kernels_c",
        ["src/vsforecast/_kernels_c.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extension_modules(),
    cmdclass={"build_ext": optional_build_ext},
)
