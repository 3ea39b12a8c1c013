"""Selects the fundamental-form assembly backend at import time.

The compiled Cython module is preferred when present; set
WILLMORELAB_BACKEND=python (or =compiled) to force a choice. Both backends
implement identical arithmetic and are cross-checked in the test suite.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("WILLMORELAB_BACKEND", "auto").lower()

if _FORCED not in ("auto", "python", "compiled"):
    raise RuntimeError(f"WILLMORELAB_BACKEND must be auto|python|compiled, got {_FORCED!r}")

_kernels_cy = None
if _FORCED in ("auto", "compiled"):
    try:
        from . import _kernels_cy  # type: ignore[no-redef]
    except ImportError:
        _kernels_cy = None
        if _FORCED == "compiled":
            raise RuntimeError(
                "WILLMORELAB_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation`"
            )

kernels = _kernels_cy if _kernels_cy is not None else _kernels_py

BACKEND = kernels.BACKEND_NAME
assemble_r3 = kernels.assemble_r3
assemble_s3 = kernels.assemble_s3


def available_backends():
    """Names of the importable backends (used by tests and benchmarks)."""
    out = {"python": _kernels_py}
    if _kernels_cy is not None:
        out["compiled"] = _kernels_cy
    else:
        try:
            from . import _kernels_cy as ext  # noqa: F811
            out["compiled"] = ext
        except ImportError:
            pass
    return out
