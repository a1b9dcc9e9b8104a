"""Hot-loop kernels with a compiled core and a pure-Python fallback.

``BACKEND`` is ``"cython"`` when the extension module imported, otherwise
``"python"``.  Both expose the same ``rk4_sweep`` signature.
"""
from . import _fallback

try:
    from ._rk4 import rk4_sweep
    BACKEND = "cython"
except ImportError:
    rk4_sweep = _fallback.rk4_sweep
    BACKEND = "python"

python_rk4_sweep = _fallback.rk4_sweep

__all__ = ["BACKEND", "rk4_sweep", "python_rk4_sweep"]
