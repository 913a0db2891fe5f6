import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-numpy install
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "trajflow.diffcore._ckernels",
                ["src/trajflow/diffcore/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
