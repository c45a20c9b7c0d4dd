"""Select the integration core: compiled extension when importable, numpy otherwise.

Set ``CONSENSUS_FLOCKING_BACKEND=python`` to force the fallback.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("CONSENSUS_FLOCKING_BACKEND", "").lower() == "python":
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else fallback
NAME = "cython" if compiled is not None else "python"


def get(name=None):
    """Return the backend module for ``name`` ('cython', 'python' or None for the active one)."""
    if name is None:
        return active
    if name == "python":
        return fallback
    if name == "cython":
        if compiled is None:
            raise RuntimeError("compiled core is not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
