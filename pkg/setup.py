import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the native kernel if possible; the package falls back to the
    pure-numpy kernel when the extension is absent."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"WARNING: native kernel build failed ({exc}); "
                  "tightbox3d will use the pure-python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: building {ext.name} failed ({exc}); "
                  "tightbox3d will use the pure-python kernel")


ext_modules = [
    Extension(
        "tightbox3d._native",
        ["src/tightbox3d/_native.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(ext_modules, compiler_directives={"language_level": 3}),
    cmdclass={"build_ext": OptionalBuildExt},
)
