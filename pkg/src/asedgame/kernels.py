"""Backend selection for the numeric inner loops.

The numba backend is used when numba imports cleanly, unless the environment
variable ``ASEDGAME_DISABLE_NUMBA`` is set to a truthy value, in which case the
vectorized numpy implementations are used instead. Both backends are required
to agree to floating-point rounding; ``tests/test_kernels.py`` checks that.
"""
import os

from . import _kernels_numpy

_DISABLED = os.environ.get("ASEDGAME_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

if _DISABLED:
    _impl = _kernels_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _impl = _kernels_numpy
        BACKEND = "numpy"

correlate_valid = _impl.correlate_valid
correlate_valid_adjoint = _impl.correlate_valid_adjoint
ternary_probs = _impl.ternary_probs
ternary_entropy = _impl.ternary_entropy
pivot = _impl.pivot

__all__ = [
    "BACKEND",
    "correlate_valid",
    "correlate_valid_adjoint",
    "ternary_probs",
    "ternary_entropy",
    "pivot",
]
