"""Build hook for the optional compiled kernels.

The Cython extension is skipped when Cython is unavailable; the package then
runs on the NumPy kernels in ``varprin._kernels._pykernels``.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "varprin._kernels._ckernels",
                ["src/varprin/_kernels/_ckernels.pyx"],
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

setup(ext_modules=ext_modules)
