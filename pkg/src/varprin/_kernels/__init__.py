"""Kernel dispatch.

The compiled extension is used when it imports; otherwise the NumPy versions
take over. ``VARPRIN_BACKEND=python`` forces the fallback and
``VARPRIN_BACKEND=compiled`` makes a missing extension an error.

Callers must go through the module attributes (``_kernels.filter_leq``), not
``from ... import``, so that :func:`set_backend` takes effect everywhere.
"""
import os

from . import _pykernels

NAMES = (
    "filter_leq",
    "argmin_active",
    "within_slack",
    "symmetry_scan",
    "triangle_scan",
    "triangle_sample",
)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

BACKEND = None


def set_backend(name):
    """Rebind the kernel functions to backend ``name`` ("python" or "compiled")."""
    global BACKEND
    if name not in BACKENDS:
        raise ImportError(f"kernel backend {name!r} is not available")
    impl = BACKENDS[name]
    g = globals()
    for fn in NAMES:
        g[fn] = getattr(impl, fn)
    BACKEND = name


def _initial():
    choice = os.environ.get("VARPRIN_BACKEND", "auto").lower()
    if choice == "auto":
        return "compiled" if "compiled" in BACKENDS else "python"
    return choice


set_backend(_initial())
