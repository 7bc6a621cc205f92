"""Rollout stepper backends.

The compiled stepper is preferred; the pure Python twin is the reference
and the fallback.  Set PREDRESS_PURE_KERNEL=1 to force the fallback.
"""

import os

from . import pure
from .pure import KernelError

_compiled = None
if not os.environ.get("PREDRESS_PURE_KERNEL"):
    try:
        from . import _rollout as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "compiled"
    run_single = _compiled.run_single
    run_pair = _compiled.run_pair
else:
    BACKEND = "pure"
    run_single = pure.run_single
    run_pair = pure.run_pair

compiled = _compiled


def backend_name():
    return BACKEND
