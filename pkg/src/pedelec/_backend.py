"""Kernel backend selection.

The compiled extension is preferred when importable; the pure-Python
kernels are the fallback.  Set ``PEDELEC_BACKEND=python`` to force the
fallback (used by the backend benchmark and the parity tests).
"""

from __future__ import annotations

import os

from pedelec import _purekern

if os.environ.get("PEDELEC_BACKEND", "").lower() == "python":
    kernels = _purekern
else:
    try:
        from pedelec import _fastkern as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _purekern

BACKEND = kernels.BACKEND_NAME


def available_backends():
    """Names of the kernel backends importable in this environment."""
    names = [_purekern.BACKEND_NAME]
    try:
        from pedelec import _fastkern

        names.append(_fastkern.BACKEND_NAME)
    except ImportError:
        pass
    return names
