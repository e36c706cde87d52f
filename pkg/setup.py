import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ROADMAP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "roadmap._kernels",
                    ["src/roadmap/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        # no Cython/numpy at build time: ship the numpy fallback only
        ext_modules = []

setup(ext_modules=ext_modules)
