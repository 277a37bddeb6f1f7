"""Build hook for the optional compiled kernels.

The package is fully functional without the extension: groundwork.kernels
falls back to the pure numpy implementations when the compiled module is
absent (or when GROUNDWORK_PURE=1).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "groundwork._kernels",
                ["src/groundwork/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
