"""Select the SCL kernel at import time.

The compiled ``_sclcore`` extension is used when it is importable; set
``POLARGD_PURE_PYTHON=1`` to force the pure-Python kernel.
"""
import os

from . import _sclpy

try:
    if os.environ.get("POLARGD_PURE_PYTHON"):
        raise ImportError("pure-Python kernel requested")
    from . import _sclcore
except ImportError:
    _sclcore = None

KERNELS = {"python": _sclpy}
if _sclcore is not None:
    KERNELS["compiled"] = _sclcore

BACKEND = "compiled" if _sclcore is not None else "python"


def get_kernel(name=None):
    if name is None:
        name = BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} not available; have {sorted(KERNELS)}") from None
