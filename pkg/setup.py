"""Builds the optional Cython convolution kernel.

The package works without it (a numpy fallback is selected at import);
build with `pip install -e . --no-build-isolation` or
`python setup.py build_ext --inplace`.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "windadapt.nn._conv_ext",
                ["src/windadapt/nn/_conv_ext.pyx"],
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
    pass

setup(ext_modules=ext_modules)
