"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``DIMERDEFECT_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy reference implementation is used.
"""

from __future__ import annotations

import os

from . import _kernels_py

_force_python = os.environ.get("DIMERDEFECT_PURE_PYTHON", "") not in ("", "0")

if _force_python:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined,no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

lerch_phi1 = _impl.lerch_phi1
kummer_remainder = _impl.kummer_remainder
bz_average = _impl.bz_average

__all__ = ["BACKEND", "lerch_phi1", "kummer_remainder", "bz_average", "python_backend"]


def python_backend():
    """The reference module, for benchmarks and cross-checks."""
    return _kernels_py
