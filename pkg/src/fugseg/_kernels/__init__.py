"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise the
pure-Python ``_pure`` module. Set ``FUGSEG_BACKEND=python`` to force the
fallback, or ``FUGSEG_BACKEND=compiled`` to fail loudly if the extension is
missing.
"""
import os

from . import _pure

_choice = os.environ.get("FUGSEG_BACKEND", "auto").lower()

compiled = None
if _choice != "python":
    try:
        from . import _core as compiled
    except ImportError:
        if _choice == "compiled":
            raise

backend = compiled if compiled is not None else _pure
BACKEND_NAME = "compiled" if compiled is not None else "python"


def available_backends():
    """Mapping of backend name to module for every importable backend."""
    out = {"python": _pure}
    if compiled is not None:
        out["compiled"] = compiled
    return out


def use_backend(name):
    """Switch the active backend at runtime ("python", "compiled" or "auto")."""
    global backend, BACKEND_NAME
    mods = available_backends()
    if name == "auto":
        name = "compiled" if "compiled" in mods else "python"
    if name not in mods:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(mods)}")
    backend = mods[name]
    BACKEND_NAME = name
    return backend
