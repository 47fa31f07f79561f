"""Build script: compiles the hot-kernel extension when Cython is available.

The package works without the extension (pure-Python kernels are selected
at import time), so a failed extension build is not fatal.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "pedelec._fastkern",
                sources=["src/pedelec/_fastkern.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
