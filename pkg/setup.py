import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: no FMA contraction, so the compiled kernels round exactly
# like the pure-Python backend and results stay bit-identical across the two.
ext = Extension(
    "grainspect.backend._kernels",
    ["src/grainspect/backend/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
