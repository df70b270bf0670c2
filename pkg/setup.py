import os

from setuptools import setup

# The compiled kernel module is optional: if Cython or a C compiler is not
# available the package falls back to the pure-numpy kernels at import time.
PYX = "src/sphereflow/kernels/_native.pyx"

ext_modules = []
if os.path.exists(PYX) and os.environ.get("SPHEREFLOW_SKIP_NATIVE", "") not in ("1", "true"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "sphereflow.kernels._native",
                    [PYX],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # -ffp-contract=off keeps results bit-identical to the
                    # numpy fallback (no FMA contraction of a*b+c).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
