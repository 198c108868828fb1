"""Build script for the compiled scan kernel.

The extension is optional: when no C toolchain is available the package
installs anyway and falls back to the NumPy implementation at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing entirely
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"compiled scan kernel not built ({exc!r}); "
            "growsurf will use the pure NumPy backend"
        )


extensions = [
    Extension(
        "growsurf.kernels._scan",
        ["src/growsurf/kernels/_scan.pyx"],
        # -ffp-contract=off keeps the distance arithmetic bitwise identical
        # to the NumPy backend (no FMA contraction).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
