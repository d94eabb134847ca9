"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``GOVKERNEL_PURE=1`` to force the pure-Python kernels.
"""

import os

from . import _kernel_py

compiled = None
if not os.environ.get("GOVKERNEL_PURE"):
    try:
        from . import _kernel as compiled
    except ImportError:
        compiled = None

BACKEND = "compiled" if compiled is not None else "python"


def get(name, use_compiled=True):
    if use_compiled and compiled is not None:
        return getattr(compiled, name)
    return getattr(_kernel_py, name)
