"""Monotone learning solver for submodular mean field games.

The compiled core lives in ``smfg._smfg`` when installed; development
builds put ``_smfg`` on the path next to this package.
"""

try:
    from ._smfg import *  # noqa: F401,F403
except ImportError:
    from _smfg import *  # noqa: F401,F403

__all__ = [name for name in dir() if not name.startswith("_")]
