from setuptools import setup
from setuptools.extension import Extension

from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled stepper bit-identical to the pure
# Python one (no FMA contraction of a*b+c).
ext = Extension(
    "predress._kernels._rollout",
    ["src/predress/_kernels/_rollout.pyx"],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], language_level="3"))
