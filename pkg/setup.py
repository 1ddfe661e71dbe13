from setuptools import setup

# The ramp-filter kernel is the hot loop of everything inverse-Radon related.
# Building the Cython extension is best effort: without it the package falls
# back to a vectorized numpy implementation selected at import time.
try:
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "cvtomo._ramp",
                ["src/cvtomo/_ramp.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3, "embedsignature": True},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
