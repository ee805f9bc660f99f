"""Heterogeneous GPU cluster orchestration simulator.

Thin Python surface over the C++ core: throughput tables, the estimate
catalog, the P1/P2 feedforward estimators, the allocation ILP solver, and
the closed-loop simulator.
"""

from hetsim._core import *  # noqa: F401,F403
from hetsim._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = __doc__ or _core_doc
