"""Build script for the compiled kernel extension.

The extension is optional: if Cython (or a C compiler) is unavailable the
package installs without it and falls back to the NumPy kernels at import
time.  See src/evoclass/kernels/__init__.py for the selection logic.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "evoclass.kernels._native",
                ["src/evoclass/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
