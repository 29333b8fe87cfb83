"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package installs without the
extension and falls back to ``powerjsr._pykernels`` at import time.
"""

import os
import sys

import numpy as np
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            self._skip(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._skip(exc)

    def _skip(self, exc):
        if os.environ.get("POWERJSR_REQUIRE_EXT"):
            raise exc
        sys.stderr.write(f"warning: compiled kernels not built ({exc}); using pure Python\n")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "powerjsr._ckernels",
        ["src/powerjsr/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
