"""Deterministic two-stage herding simulator (capture, then per-edge escort).

Thin Python layer over the C++ core: formation synthesis, reach-avoid
primitives, funnel transforms, path/assignment planning, and whole-mission
runs from scenario files.
"""

from . import _herdsim as _impl
from ._herdsim import *  # noqa: F401,F403

__version__ = _impl.__version__
__all__ = [name for name in dir(_impl) if not name.startswith("_")]
