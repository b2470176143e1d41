"""Build script for the optional compiled accuracy kernels.

The package is fully functional without the extension: flexbench.accuracy
falls back to the pure-Python kernels at import time. ``optional=True``
keeps installation working on hosts without a C toolchain.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "flexbench.accuracy._speedups",
                ["src/flexbench/accuracy/_speedups.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
