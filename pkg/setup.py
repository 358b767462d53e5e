"""Build script for the optional compiled kernels.

The package works without the extension; ``thermoscan.kernels`` falls back to
the numpy implementation when ``thermoscan._ckernels`` cannot be imported.
"""
import os

from setuptools import Extension, setup


def _arch_flags():
    # x86-64-v2 brings SSE4.1, which lets floor() compile to one instruction
    arch = os.environ.get("THERMOSCAN_MARCH", "x86-64-v2")
    if arch == "none" or os.uname().machine not in ("x86_64", "AMD64"):
        return []
    return [f"-march={arch}"]


def _extensions():
    if os.environ.get("THERMOSCAN_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "thermoscan._ckernels",
        ["src/thermoscan/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # no FMA contraction: results must match the numpy fallback bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off", *_arch_flags()],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
