"""Solve-kernel backend selection.

The batch constraint solver exists twice: a compiled Cython/LAPACK kernel
(``tightbox3d._native``) and a pure-numpy fallback (``tightbox3d._pure``).
The native kernel is picked at import when present; set the environment
variable ``TIGHTBOX3D_BACKEND`` to ``native`` or ``python`` to force one.
"""

import os

from . import _pure

_BACKENDS = {"python": _pure.solve_batch}

try:
    from . import _native
except ImportError:
    _native = None
else:
    _BACKENDS["native"] = _native.solve_batch

_requested = os.environ.get("TIGHTBOX3D_BACKEND", "auto").lower()
if _requested in ("", "auto"):
    BACKEND = "native" if "native" in _BACKENDS else "python"
elif _requested in _BACKENDS:
    BACKEND = _requested
elif _requested == "native":
    raise ImportError(
        "TIGHTBOX3D_BACKEND=native but the compiled kernel is not installed"
    )
else:
    raise ValueError(f"unknown TIGHTBOX3D_BACKEND value {_requested!r}")

solve_batch = _BACKENDS[BACKEND]


def available_backends() -> dict:
    """Mapping of backend name to its solve_batch callable."""
    return dict(_BACKENDS)
