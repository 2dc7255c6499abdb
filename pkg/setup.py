"""Build the optional compiled kernels.

If Cython or a C compiler is unavailable the package still installs and
falls back to the numpy kernels at import time.
"""

from __future__ import annotations

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "dimerdefect._kernels",
                ["src/dimerdefect/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass


try:
    from setuptools.command.build_ext import build_ext

    class OptionalBuildExt(build_ext):
        def run(self):
            try:
                super().run()
            except Exception as exc:  # compiler missing or failing
                print(f"warning: compiled kernels not built ({exc}); using numpy fallback")

        def build_extension(self, ext):
            try:
                super().build_extension(ext)
            except Exception as exc:
                print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback")

    cmdclass = {"build_ext": OptionalBuildExt}
except ImportError:
    cmdclass = {}

setup(ext_modules=ext_modules, cmdclass=cmdclass)
