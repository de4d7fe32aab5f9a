"""Hot loops: compiled Cython kernels with a numpy fallback chosen at import.

Set ``MESOECHO_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation in use (``"cython"`` or ``"python"``).
"""

import os

from . import _fallback

if os.environ.get("MESOECHO_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

apply_stage = _impl.apply_stage
apply_program = _impl.apply_program
glbe_march = _impl.glbe_march

__all__ = ["BACKEND", "apply_program", "apply_stage", "glbe_march"]
