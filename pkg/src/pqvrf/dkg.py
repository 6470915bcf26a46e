"""Delegated key generation: hand a participant's delegation key to the worker.

The participant encapsulates a fresh key K toward the off-chain component's
RLWE public key, wraps its delegation secret under K and posts the bundle to
the chain. The worker decapsulates, unwraps and signs as that participant.

KEM: a random n-bit string is RLWE-encrypted; K = keccak256(bits || ct) and
the ciphertext carries tag = keccak256(ct || "KEMv1").
Wrap: keystream keccak256(K || nonce || ctr) XORed onto the secret, tag
keccak256(K || "mac" || nonce || body).
"""

from __future__ import annotations

import hmac
import struct
from dataclasses import dataclass

import numpy as np

from . import ring, ringsig, rlwe
from .errors import IntegrityError, InvalidInputError, MembershipError
from .proof import VrfProof, proof_message
from .ring import RingParams
from .ringsig import PublicParams, UserKey
from .rlwe import RlweCiphertext, RlweKeyPair

KEM_LABEL = b"KEMv1"
NONCE_LEN = 16
DKG_SUFFIX = "#dkg"


def delegation_did(did: str, generation: int = 0) -> str:
    """Identity of the delegation key; later generations replace revoked keys."""
    return did + DKG_SUFFIX + (f"#{generation}" if generation else "")


def generate_keys(pp: PublicParams, msk, did: str, rng, generation: int = 0):
    onchain = ringsig.keygen(pp, msk, did, rng)
    delegation = ringsig.keygen(pp, msk, delegation_did(did, generation), rng)
    return onchain, delegation


# ---------------------------------------------------------------------------
# KEM


@dataclass(frozen=True)
class KemCiphertext:
    c: RlweCiphertext
    binding_tag: bytes

    def to_bytes(self) -> bytes:
        cb = self.c.to_bytes()
        return struct.pack("<I", len(cb)) + cb + struct.pack("<I", len(self.binding_tag)) + self.binding_tag

    @classmethod
    def from_bytes(cls, buf: bytes, params: RingParams) -> "KemCiphertext":
        fields = _split_fields(buf, 2)
        return cls(RlweCiphertext.from_bytes(fields[0], params), fields[1])


def _binding(ct_bytes: bytes) -> bytes:
    return ring.keccak256(ct_bytes + KEM_LABEL)


def encaps(params: RingParams, pk_off, rng):
    bits = rng.integers(0, 2, size=params.n, dtype=np.int64)
    ct = rlwe.rlwe_enc2(bits, pk_off, params, rng)
    cb = ct.to_bytes()
    key = ring.keccak256(rlwe.bits_to_bytes(bits) + cb)
    return KemCiphertext(ct, _binding(cb)), key


def decaps(params: RingParams, kem_ct: KemCiphertext, sk_off) -> bytes:
    cb = kem_ct.c.to_bytes()
    if len(kem_ct.binding_tag) != 32 or not hmac.compare_digest(kem_ct.binding_tag, _binding(cb)):
        raise IntegrityError("KEM binding tag mismatch")
    bits = rlwe.rlwe_dec(kem_ct.c, sk_off, params)
    return ring.keccak256(rlwe.bits_to_bytes(bits) + cb)


# ---------------------------------------------------------------------------
# symmetric wrap


@dataclass(frozen=True)
class WrappedKey:
    nonce: bytes
    body: bytes
    mac: bytes


def _keystream(key: bytes, nonce: bytes, length: int) -> bytes:
    out = bytearray()
    ctr = 0
    while len(out) < length:
        out += ring.keccak256(key + nonce + ctr.to_bytes(4, "big"))
        ctr += 1
    return bytes(out[:length])


def _mac(key: bytes, nonce: bytes, body: bytes) -> bytes:
    return ring.keccak256(key + b"mac" + nonce + body)


def _xor(a: bytes, b: bytes) -> bytes:
    return (np.frombuffer(a, dtype=np.uint8) ^ np.frombuffer(b, dtype=np.uint8)).tobytes()


def wrap_secret(key: bytes, secret, rng) -> WrappedKey:
    """Encrypt and authenticate the secret quadruple (s1, s2, s1*, s2*)."""
    if len(key) != 32:
        raise InvalidInputError("wrap key must be 32 bytes")
    parts = [np.asarray(x, dtype=np.int64) for x in secret]
    n = parts[0].shape[0]
    if len(parts) != 4 or any(p.shape != (n,) for p in parts):
        raise InvalidInputError("secret must be four polynomials of equal length")
    plain = struct.pack("<I", n) + b"".join(ring.signed_to_bytes(p) for p in parts)
    nonce = rng.bytes(NONCE_LEN)
    body = _xor(plain, _keystream(key, nonce, len(plain)))
    return WrappedKey(nonce, body, _mac(key, nonce, body))


def unwrap_secret(key: bytes, wrapped: WrappedKey):
    if len(key) != 32:
        raise InvalidInputError("wrap key must be 32 bytes")
    if len(wrapped.mac) != 32 or not hmac.compare_digest(wrapped.mac, _mac(key, wrapped.nonce, wrapped.body)):
        raise IntegrityError("wrapped key MAC mismatch")
    plain = _xor(wrapped.body, _keystream(key, wrapped.nonce, len(wrapped.body)))
    (n,) = struct.unpack("<I", plain[:4])
    if len(plain) != 4 + 16 * n:
        raise IntegrityError("wrapped key has inconsistent length")
    return tuple(ring.signed_from_bytes(plain[4 + 4 * n * i:4 + 4 * n * (i + 1)], n) for i in range(4))


# ---------------------------------------------------------------------------
# bundle

BUNDLE_MAGIC = b"DLGB"


@dataclass(frozen=True)
class DelegationBundle:
    wrapped: WrappedKey
    kem_ct: KemCiphertext
    pp: PublicParams
    params: RingParams  # RLWE parameters of the KEM

    def to_bytes(self) -> bytes:
        fields = [
            self.wrapped.nonce,
            self.wrapped.body,
            self.wrapped.mac,
            self.kem_ct.to_bytes(),
            self.pp.fingerprint(),
            struct.pack("<IId", self.params.n, self.params.q, self.params.sigma),
        ]
        return BUNDLE_MAGIC + struct.pack("<H", 1) + b"".join(struct.pack("<I", len(f)) + f for f in fields)

    @classmethod
    def from_bytes(cls, buf: bytes, pp: PublicParams, params: RingParams) -> "DelegationBundle":
        """Parse and check references; any inconsistency is an integrity error."""
        buf = bytes(buf)
        if buf[:4] != BUNDLE_MAGIC or buf[4:6] != struct.pack("<H", 1):
            raise IntegrityError("bad bundle header")
        nonce, body, mac, kem, fp, pinfo = _split_fields(buf[6:], 6)
        if len(nonce) != NONCE_LEN or len(mac) != 32:
            raise IntegrityError("bad wrapped-key field sizes")
        if fp != pp.fingerprint():
            raise IntegrityError("bundle refers to different public parameters")
        if pinfo != struct.pack("<IId", params.n, params.q, params.sigma):
            raise IntegrityError("bundle refers to different KEM parameters")
        try:
            kem_ct = KemCiphertext.from_bytes(kem, params)
        except InvalidInputError as exc:
            raise IntegrityError(f"malformed KEM ciphertext: {exc}") from exc
        return cls(WrappedKey(nonce, body, mac), kem_ct, pp, params)


def _split_fields(buf: bytes, count: int):
    buf = bytes(buf)
    out, off = [], 0
    for _ in range(count):
        if off + 4 > len(buf):
            raise IntegrityError("truncated field")
        (ln,) = struct.unpack("<I", buf[off:off + 4])
        off += 4
        if off + ln > len(buf):
            raise IntegrityError("truncated field")
        out.append(buf[off:off + ln])
        off += ln
    if off != len(buf):
        raise IntegrityError("trailing bytes")
    return out


def delegate_key(delegation: UserKey, pk_off, kem_params: RingParams, pp: PublicParams, rng) -> DelegationBundle:
    kem_ct, key = encaps(kem_params, pk_off, rng)
    return DelegationBundle(wrap_secret(key, delegation.sk, rng), kem_ct, pp, kem_params)


def open_bundle(sk_off, bundle: DelegationBundle, members=None) -> UserKey:
    """Recover the delegated key; its DID is found among ``members`` by H1."""
    key = decaps(bundle.params, bundle.kem_ct, _secret_of(sk_off))
    s1, s2, s1s, s2s = unwrap_secret(key, bundle.wrapped)
    pp = bundle.pp
    params = pp.params
    if s1.shape != (params.n,):
        raise IntegrityError("delegated key does not match ring degree")
    t1 = ring.ring_add(s1 % params.q, ring.ring_mul(s2 % params.q, pp.h, params), params)
    did = None
    for m in members or ():
        if np.array_equal(ringsig.h1(m, params), t1):
            did = m
            break
    if did is None:
        raise MembershipError("delegated key's identity is not in the delegation ring")
    return UserKey(did, t1, s1, s2, s1s, s2s)


def offchain_sign(sk_off, bundle: DelegationBundle, seed: bytes, vrf_output: bytes, members, rng) -> VrfProof:
    key = open_bundle(sk_off, bundle, members)
    sigma = ringsig.sign(bundle.pp, members, proof_message(seed, vrf_output), key, rng)
    return VrfProof(bytes(vrf_output), bytes(seed), sigma)


def _secret_of(sk_off):
    return sk_off.secret_s if isinstance(sk_off, RlweKeyPair) else sk_off
