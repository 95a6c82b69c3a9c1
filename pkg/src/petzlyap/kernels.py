"""Backend selection for the hot loops.

``PETZLYAP_BACKEND=numpy`` forces the pure-numpy path; the default is numba
when it imports, numpy otherwise.  Both backends expose ``jacobi_eigh`` and
``rk4_advance`` with identical signatures.
"""

import logging
import os

logger = logging.getLogger(__name__)


def _select():
    wanted = os.environ.get("PETZLYAP_BACKEND", "numba").strip().lower()
    if wanted not in ("numba", "numpy"):
        raise ValueError(f"PETZLYAP_BACKEND must be 'numba' or 'numpy', got {wanted!r}")
    if wanted == "numba":
        try:
            from . import _kernels_numba as mod
            return "numba", mod
        except ImportError:  # pragma: no cover - numba is a declared dependency
            logger.warning("numba unavailable, falling back to numpy kernels")
    from . import _kernels_numpy as mod
    return "numpy", mod


BACKEND, _impl = _select()
jacobi_eigh = _impl.jacobi_eigh
rk4_advance = _impl.rk4_advance
