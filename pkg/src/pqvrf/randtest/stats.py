"""Ones ratio, byte entropy and the closed-form entropy estimate."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidInputError, PreconditionError
from .nist import as_bits

MIN_ENTROPY_BYTES = 4096


def ones_ratio(seq, block_bits: int = 128):
    """Overall fraction of ones and the fraction in each full block."""
    bits = as_bits(seq)
    if block_bits < 1:
        raise InvalidInputError("block size must be positive")
    nblocks = len(bits) // block_bits
    if nblocks == 0:
        raise PreconditionError(f"need at least {block_bits} bits")
    window = bits[: nblocks * block_bits]
    per_block = window.reshape(nblocks, block_bits).mean(axis=1)
    return float(window.mean()), per_block.tolist()


def empirical_entropy(stream: bytes) -> float:
    """Plug-in Shannon entropy of the byte histogram, in bits per byte."""
    data = np.frombuffer(bytes(stream), dtype=np.uint8)
    if len(data) < MIN_ENTROPY_BYTES:
        raise PreconditionError(f"entropy estimate needs at least {MIN_ENTROPY_BYTES} bytes")
    p = np.bincount(data, minlength=256) / len(data)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def miller_madow_bias(symbols: int, samples: int) -> float:
    """Expected downward bias of the plug-in estimator, in bits."""
    return (symbols - 1) / (2.0 * samples * math.log(2.0))


def log2_theoretical_entropy(n_participants: int, Z: float):
    """(sign, log2 |H|) for H = -(p log2 p) 2^256 with p = 2^(-256 n) / Z."""
    if n_participants < 1:
        raise InvalidInputError("need at least one participant")
    if not Z > 0:
        raise InvalidInputError("Z must be positive")
    log2_p = -math.log2(Z) - 256.0 * n_participants
    inner = -log2_p  # -log2 p
    if inner == 0:
        return 0, -math.inf
    return (1 if inner > 0 else -1), 256.0 + log2_p + math.log2(abs(inner))


def theoretical_entropy(n_participants: int, Z: float) -> float:
    if n_participants < 1:
        raise InvalidInputError("need at least one participant")
    if not Z > 0:
        raise InvalidInputError("Z must be positive")
    # exact when Z is a power of two: the mantissa and exponent parts separate
    inner = math.log2(Z) + 256 * n_participants
    return math.ldexp(inner / Z, 256 - 256 * n_participants)
