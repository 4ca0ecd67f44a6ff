"""Builds the optional compiled kernel extension.

The package works without it: nndialog.kernels falls back to the pure
numpy backend when the extension is missing or NNDIALOG_KERNELS=py.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Carry on with the pure-Python install if the extension fails to build."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernels ({exc}); "
                  "falling back to numpy backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); "
                  "falling back to numpy backend")


try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "nndialog.kernels._ckernels",
                ["src/nndialog/kernels/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
