import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    HAVE_CYTHON = True
except ImportError:
    HAVE_CYTHON = False

# -ffp-contract=off keeps the compiled sums bit-identical to the numpy fallback
# (no fused multiply-add reassociation).
compile_args = ["-O3", "-ffp-contract=off"]
if os.name == "nt":  # pragma: no cover
    compile_args = ["/O2", "/fp:precise"]

ext = ".pyx" if HAVE_CYTHON else ".c"
extensions = [
    Extension(
        "tcmfg._kernels",
        sources=[os.path.join("src", "tcmfg", "_kernels" + ext)],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

if HAVE_CYTHON:
    extensions = cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=extensions)
