"""Select the kernel implementation at import time.

The compiled ``_ckernels`` module is used when it was built; otherwise, or
when ``POWERJSR_PURE_PYTHON`` is set to a non-empty value, the numpy
implementation in ``_pykernels`` is used. Both have identical signatures.
"""

import importlib
import os

from . import _pykernels


def load(name=None):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("powerjsr._ckernels")
    raise ValueError(f"unknown backend {name!r}")


def available():
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


if os.environ.get("POWERJSR_PURE_PYTHON"):
    kernels = _pykernels
else:
    try:
        kernels = load("cython")
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.BACKEND
