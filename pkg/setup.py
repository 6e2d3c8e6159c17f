"""Build script for the optional compiled edit-distance kernel.

The package is pure Python plus one Cython extension. The extension is
marked optional: if no compiler (or no Cython) is available the install
still succeeds and the pure-Python fallback is used at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "corrspace._editdist",
                ["src/corrspace/_editdist.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
