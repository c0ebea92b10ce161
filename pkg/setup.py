import os

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    USE_CYTHON = os.environ.get("SPECBAND_NO_EXT", "") in ("", "0")
except ImportError:
    USE_CYTHON = False

EXTENSIONS = []
if USE_CYTHON:
    EXTENSIONS = cythonize(
        [
            Extension(
                "specband._ckernels",
                ["src/specband/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=EXTENSIONS)
