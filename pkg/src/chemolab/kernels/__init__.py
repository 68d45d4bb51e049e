"""Stepping-engine selection.

Two interchangeable engines implement the same advance_to contract: a
compiled extension built from _core.pyx (1D, GIL-free loop) and a numpy
fallback (1D and 2D).  Selection order for "auto": the CHEMOLAB_ENGINE
environment variable if set, else the compiled engine when it is available
and supports the requested dimension, else the numpy engine.
"""

from __future__ import annotations

import os

from ..errors import ConfigError
from . import pure

try:
    from . import _core as compiled
except ImportError:  # extension not built; numpy engine covers everything
    compiled = None

__all__ = ["pure", "compiled", "get_engine", "available_engines"]


def available_engines() -> list[str]:
    names = ["pure"]
    if compiled is not None:
        names.append("compiled")
    return names


def get_engine(name: str = "auto", dim: int = 1):
    """Resolve an engine module by name for a given grid dimension."""
    if name in (None, "", "auto"):
        name = os.environ.get("CHEMOLAB_ENGINE", "auto")
    if name == "auto":
        if compiled is not None and dim in compiled.SUPPORTED_DIMS:
            return compiled
        return pure
    if name == "pure":
        return pure
    if name == "compiled":
        if compiled is None:
            raise ConfigError("compiled engine requested but the extension is not built")
        if dim not in compiled.SUPPORTED_DIMS:
            raise ConfigError(f"compiled engine does not support {dim}D grids")
        return compiled
    raise ConfigError(f"unknown engine {name!r}; expected auto, pure, or compiled")
