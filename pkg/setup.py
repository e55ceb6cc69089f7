"""Build script: compiles the optional Cython stencil kernels.

The package works without the extension (a NumPy fallback is selected at
import time); a failed compile therefore must not fail the install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "luvtsim._stencil",
                ["src/luvtsim/_stencil.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
    for ext in extensions:
        ext.optional = True
else:
    extensions = []

setup(ext_modules=extensions)
