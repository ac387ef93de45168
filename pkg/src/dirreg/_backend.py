"""Select the kernel implementation at import time.

The compiled ``_core`` extension is preferred; the numpy fallback is used when
it is missing or when ``DIRREG_PURE_PYTHON=1`` is set in the environment.
"""
import os

from . import _fallback

if os.environ.get("DIRREG_PURE_PYTHON", "0") == "1":
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "python"

lgamma = _impl.lgamma
digamma = _impl.digamma
regression_logp_grad = _impl.regression_logp_grad
free_logp_grad = _impl.free_logp_grad


def available_backends():
    """Map backend name -> kernel module for every importable backend."""
    out = {"python": _fallback}
    try:
        from . import _core
    except ImportError:
        pass
    else:
        out["cython"] = _core
    return out
