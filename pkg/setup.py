"""Builds the optional compiled search kernel; the package works without it."""
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    ext_modules = cythonize(["src/linflow/_kernels/_search.pyx"], quiet=True)
except ImportError:
    pass

setup(ext_modules=ext_modules)
