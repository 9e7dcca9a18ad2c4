"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension; the pure numpy
fallback in protoseg.kernels.pure is selected at import when the build
is unavailable.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "protoseg.kernels._core",
                ["src/protoseg/kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

for ext in extensions:
    ext.optional = True

setup(ext_modules=extensions)
