"""Kernel backend selection.

The compiled extension is used when importable; ``FXIP_BACKEND=python`` forces
the numpy fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
if os.environ.get("FXIP_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as kernels  # noqa: F811
    except ImportError:
        kernels = _pykernels

BACKEND = kernels.BACKEND


def threads():
    """Worker cap from ``FXIP_THREADS`` (0 means all cores)."""
    env = os.environ.get("FXIP_THREADS")
    return max(1, int(env)) if env else 0
