"""Build script: compiles the optional term-arithmetic extension.

The package works without the extension (a NumPy fallback is selected at
import time), so the build is marked optional and a failed compile does not
break installation.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "possum._core_fast",
                ["src/possum/_core_fast.pyx"],
                include_dirs=[np.get_include()],
                language="c++",
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
