"""Build script for the optional compiled kernel core.

The package is fully functional without the extension: ``prigp.backend``
falls back to the pure-NumPy implementation when ``prigp._ckernels`` is
missing (see ``src/prigp/_pykernels.py``).
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "prigp._ckernels",
                ["src/prigp/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:  # Cython or NumPy missing at build time: pure-Python install
    extensions = []

setup(ext_modules=extensions)
