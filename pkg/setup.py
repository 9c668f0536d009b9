"""Build script: compiles the solver-loop accelerator when a toolchain is available.

The package is fully functional without the extension; dipca._backend falls
back to the NumPy loops at import time.  Set DIPCA_NO_EXT=1 to skip the
compilation step entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Best-effort build_ext: a compiler failure must not fail the install."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: skipping compiled solver loops ({exc}); "
                  "pure NumPy backend will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: could not build {ext.name} ({exc}); "
                  "pure NumPy backend will be used")


def extensions():
    if os.environ.get("DIPCA_NO_EXT") == "1":
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:  # pragma: no cover - build env without cython
        return []
    ext = Extension(
        "dipca._solve_loops_c",
        ["src/dipca/_solve_loops_c.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
