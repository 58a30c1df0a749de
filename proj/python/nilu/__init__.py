"""Learned and classical incomplete-LU preconditioners for GMRES."""

try:
    from ._nilu import *  # noqa: F401,F403  (installed wheel layout)
except ImportError:
    from _nilu import *  # noqa: F401,F403  (build-tree layout for tests)
