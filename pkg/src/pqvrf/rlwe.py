"""Ring-LWE key generation, RLWE_enc2 encryption and decryption."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import ring
from .errors import InvalidInputError
from .ring import RingParams

MAGIC = b"RLWE"
VERSION = 1
HEADER_LEN = 16


@dataclass(frozen=True)
class RlweKeyPair:
    secret_s: np.ndarray
    public_a: np.ndarray
    public_p: np.ndarray
    params: RingParams

    @property
    def public(self):
        return self.public_a, self.public_p


@dataclass(frozen=True)
class RlweCiphertext:
    c1: np.ndarray
    c2: np.ndarray
    params: RingParams

    def to_bytes(self) -> bytes:
        p = self.params
        return (
            MAGIC
            + struct.pack("<HHII", VERSION, 0, p.n, p.q)
            + ring.poly_to_bytes(self.c1, p)
            + ring.poly_to_bytes(self.c2, p)
        )

    def coefficient_bytes(self) -> bytes:
        """c1 || c2 without the header: the VRF output preimage."""
        return ring.poly_to_bytes(self.c1, self.params) + ring.poly_to_bytes(self.c2, self.params)

    @classmethod
    def from_bytes(cls, buf: bytes, params: RingParams) -> "RlweCiphertext":
        buf = bytes(buf)
        if len(buf) < HEADER_LEN or buf[:4] != MAGIC:
            raise InvalidInputError("not an RLWE ciphertext")
        version, reserved, n, q = struct.unpack("<HHII", buf[4:HEADER_LEN])
        if version != VERSION or reserved or n != params.n or q != params.q:
            raise InvalidInputError("ciphertext header does not match parameters")
        width = n * params.coeff_bytes
        if len(buf) != HEADER_LEN + 2 * width:
            raise InvalidInputError("ciphertext length mismatch")
        c1 = ring.poly_from_bytes(buf[HEADER_LEN:HEADER_LEN + width], params)
        c2 = ring.poly_from_bytes(buf[HEADER_LEN + width:], params)
        return cls(c1, c2, params)


def rlwe_keygen(params: RingParams, rng) -> RlweKeyPair:
    a = ring.sample_uniform_poly(params, rng)
    s = ring.sample_gaussian_poly(params, params.sigma, rng)
    e = ring.sample_gaussian_poly(params, params.sigma, rng)
    p = ring.ring_add(ring.ring_mul(a, s, params), e, params)
    return RlweKeyPair(s % params.q, a, p, params)


def _check_bits(m, params):
    bits = np.asarray(m, dtype=np.int64)
    if bits.shape != (params.n,):
        raise InvalidInputError(f"message must have {params.n} bits")
    if np.any((bits != 0) & (bits != 1)):
        raise InvalidInputError("message bits must be 0 or 1")
    return bits


def rlwe_enc2(m, pk, params: RingParams, rng, zero_noise: bool = False) -> RlweCiphertext:
    """Encrypt a bit message under ``pk = (a, p)``.

    ``zero_noise`` replaces the three error samples by zero; it exists so the
    algebra c2 - s c1 = encode(m) can be checked exactly.
    """
    bits = _check_bits(m, params)
    a, p = (ring.as_poly(x, params) for x in pk)
    q = params.q
    encoded = bits * (q // 2)
    if zero_noise:
        e1 = e2 = e3 = ring.zero(params)
    else:
        e1, e2, e3 = (ring.sample_gaussian_poly(params, params.sigma, rng) % q for _ in range(3))
    e3 = (e3 + encoded) % q
    e1h, e2h, e3h = (ring.ntt_forward(x, params) for x in (e1, e2, e3))
    ah, ph = ring.ntt_forward(a, params), ring.ntt_forward(p, params)
    c1h = (e2h + ah * e1h) % q
    c2h = (e3h + ph * e1h) % q
    # back to the coefficient domain; serialized ciphertexts never carry NTT layout
    return RlweCiphertext(ring.ntt_inverse(c1h, params), ring.ntt_inverse(c2h, params), params)


def decryption_noise(ct: RlweCiphertext, sk, params: RingParams) -> np.ndarray:
    """Centered c2 - s c1."""
    d = ring.ring_sub(ct.c2, ring.ring_mul(sk, ct.c1, params), params)
    return ring.centered(d, params.q)


def rlwe_dec(ct: RlweCiphertext, sk, params: RingParams) -> np.ndarray:
    d = decryption_noise(ct, sk, params)
    return (np.abs(d) >= params.q / 4).astype(np.int64)


def seed_to_message(seed: bytes, params: RingParams) -> np.ndarray:
    """Expand an arbitrary-length seed to an n-bit message (keccak counter mode)."""
    return ring.hash_to_bits(seed, params.n)


def bits_to_bytes(bits) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def secret_to_bytes(kp: RlweKeyPair) -> bytes:
    return ring.poly_to_bytes(kp.secret_s, kp.params)


def keypair_to_bytes(kp: RlweKeyPair) -> bytes:
    p = kp.params
    return (
        b"RLWK"
        + struct.pack("<HHIId", VERSION, 0, p.n, p.q, p.sigma)
        + ring.poly_to_bytes(kp.secret_s, p)
        + ring.poly_to_bytes(kp.public_a, p)
        + ring.poly_to_bytes(kp.public_p, p)
    )


def keypair_from_bytes(buf: bytes) -> RlweKeyPair:
    if buf[:4] != b"RLWK":
        raise InvalidInputError("not an RLWE key file")
    version, reserved, n, q, sigma = struct.unpack("<HHIId", buf[4:24])
    if version != VERSION or reserved:
        raise InvalidInputError("unsupported RLWE key file version")
    params = RingParams(n=n, q=q, sigma=sigma, s=sigma)
    w = n * params.coeff_bytes
    body = buf[24:]
    if len(body) != 3 * w:
        raise InvalidInputError("RLWE key file length mismatch")
    s, a, p = (ring.poly_from_bytes(body[i * w:(i + 1) * w], params) for i in range(3))
    return RlweKeyPair(s, a, p, params)
