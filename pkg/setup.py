import numpy
from setuptools import setup, Extension

# The compiled kernels are an optional speedup.  If Cython is missing or the
# toolchain cannot build the extension, the package still works through the
# numpy fallback engine selected at import time in chemolab.kernels.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "chemolab.kernels._core",
                ["src/chemolab/kernels/_core.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
