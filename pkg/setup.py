"""Build script: compiles the optional fast kernels.

The extension is a pure optimization; if Cython or a C++ toolchain is
unavailable the build degrades to the pure-Python kernels (selected at
import time by simpmine._kernels). Set SIMPMINE_NO_EXT=1 to skip the
extension build entirely.
"""

import logging
import os

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension

log = logging.getLogger("simpmine.setup")


class optional_build_ext(build_ext):
    """Treat extension build failures as a soft degrade, not a hard error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing
            log.warning("skipping compiled kernels: %s", exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            log.warning("failed to compile %s (pure-Python kernels will be used): %s",
                        ext.name, exc)


def extensions():
    if os.environ.get("SIMPMINE_NO_EXT") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        log.warning("Cython not available; building without compiled kernels")
        return []
    ext = Extension(
        "simpmine._kernels._speedups",
        ["src/simpmine/_kernels/_speedups.pyx"],
        language="c++",
        extra_compile_args=["-O3", "-std=c++11"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
