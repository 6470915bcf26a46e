"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set ``PQVRF_PURE_PYTHON=1`` to
force the numpy fallback. Both backends return bit-identical results.
"""

import os

from . import _fallback

BACKEND = "python"

if not os.environ.get("PQVRF_PURE_PYTHON"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

keccak_f1600 = _impl.keccak_f1600
keccak_sponge = _impl.keccak_sponge
keccak256 = _impl.keccak256
ntt_forward = _impl.ntt_forward
ntt_inverse = _impl.ntt_inverse
berlekamp_massey = _impl.berlekamp_massey

__all__ = [
    "BACKEND",
    "keccak_f1600",
    "keccak_sponge",
    "keccak256",
    "ntt_forward",
    "ntt_inverse",
    "berlekamp_massey",
]
