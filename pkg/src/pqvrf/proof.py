"""The VRF proof tuple pi = (vrf_output, seed, sigma) and its encodings."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from . import ringsig
from .errors import InvalidInputError
from .ring import RingParams
from .ringsig import RingSignature

SEED_LEN = 148
OUTPUT_LEN = 32


def proof_message(seed: bytes, vrf_output: bytes) -> bytes:
    """Canonical encoding of m = (seed, vrf_output) signed by the worker."""
    seed, out = bytes(seed), bytes(vrf_output)
    return b"pqvrf/m" + struct.pack("<I", len(seed)) + seed + struct.pack("<I", len(out)) + out


@dataclass(frozen=True)
class VrfProof:
    vrf_output: bytes
    seed: bytes
    sigma: RingSignature

    @property
    def message(self) -> bytes:
        return proof_message(self.seed, self.vrf_output)

    def to_bytes(self, params: RingParams) -> bytes:
        sig = ringsig.signature_to_bytes(self.sigma, params)
        return (
            b"VRFP"
            + struct.pack("<HH", 1, len(self.seed))
            + bytes(self.vrf_output)
            + bytes(self.seed)
            + sig
        )

    @classmethod
    def from_bytes(cls, buf: bytes, params: RingParams) -> "VrfProof":
        buf = bytes(buf)
        if len(buf) < 8 or buf[:4] != b"VRFP":
            raise InvalidInputError("not a VRF proof")
        version, seed_len = struct.unpack("<HH", buf[4:8])
        if version != 1:
            raise InvalidInputError(f"unsupported proof version {version}")
        out = buf[8:8 + OUTPUT_LEN]
        seed = buf[8 + OUTPUT_LEN:8 + OUTPUT_LEN + seed_len]
        if len(out) != OUTPUT_LEN or len(seed) != seed_len:
            raise InvalidInputError("truncated proof")
        sig = ringsig.signature_from_bytes(buf[8 + OUTPUT_LEN + seed_len:], params)
        return cls(out, seed, sig)
