"""Kernel backend selection.

The hot loops (reduced-dynamics RHS and the adaptive integrator) exist twice:
a Cython extension (``ringctrl._kernels``) and a pure-numpy fallback
(``ringctrl._kernels_py``).  The compiled backend is used when importable;
set ``RINGCTRL_BACKEND=python`` or ``=compiled`` to force a choice.  Both
implement the same algorithm; results agree to integration accuracy but not
bit-for-bit, so reproducibility guarantees hold per backend.
"""

import os

from . import _kernels_py

_FORCED = os.environ.get("RINGCTRL_BACKEND", "auto").strip().lower()

if _FORCED in ("", "auto"):
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py
elif _FORCED == "python":
    kernels = _kernels_py
elif _FORCED == "compiled":
    from . import _kernels as kernels
else:
    raise ValueError(
        f"RINGCTRL_BACKEND={_FORCED!r} not understood (use auto, compiled or python)"
    )

BACKEND = kernels.BACKEND_NAME


def get_kernels(name=None):
    """Return a kernel module by name ('compiled' or 'python'); the active
    backend when ``name`` is None.  Raises ImportError if unavailable."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names
