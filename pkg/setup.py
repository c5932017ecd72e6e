"""Builds the optional compiled kernels; the package falls back to pure Python without them."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: ship the pure-Python kernels only
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("multitone._kernels", ["src/multitone/_kernels.pyx"],
                   extra_compile_args=["-O3"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
