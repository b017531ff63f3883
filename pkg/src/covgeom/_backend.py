"""Select the kernel implementation at import time.

The compiled extension is used when it was built; set the environment
variable ``COVGEOM_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

python_kernels = _kernels_py
compiled_kernels = None

if os.environ.get("COVGEOM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if kernels is compiled_kernels else "python"
