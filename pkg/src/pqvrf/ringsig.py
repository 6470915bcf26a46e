"""DID-based linkable ring signature over the NTRU lattice.

Users' public keys are hashes of their DIDs, t1 = H1(did); the key authority
extracts a short preimage (s1, s2) of t1 with its trapdoor and adds a fresh
Gaussian pair (s1*, s2*). A signature carries one masked pair per ring member,
the challenge bits v and the link tag I = t1 + s1* + s2* h, which is the
same for every signature made with the same key.

The signer's response is z_k = (s1 + s1*) v + y_k1, (s2 + s2*) v + y_k2, so
that sum(z_i1 + z_i2 h) - I v equals the masked commitment sum(y_i1 + y_i2 h)
and the verifier's challenge recomputation matches.
"""

from __future__ import annotations

import math
import re
import struct
from dataclasses import dataclass

import numpy as np

from . import ntru, ring
from .errors import InvalidInputError, MembershipError, ParameterError
from .ntru import NtruTrapdoor
from .ring import RingParams

# masking width = MASK_FACTOR * sqrt(n) * sigma; keeps the secret term's share
# of ||z_k||^2 near 1/MASK_FACTOR^2 so the signer's slot looks like the others
MASK_FACTOR = 32
MAX_RING = 64
SIGN_ATTEMPTS = 64

H1_TAG = b"pqvrf/H1"
H2_TAG = b"pqvrf/H2"
DID_PREFIX = "did:pqvrf:"
_DID_RE = re.compile(r"^did:pqvrf:[0-9a-f]+(#[A-Za-z0-9._-]+)*$")


@dataclass(frozen=True)
class PublicParams:
    h: np.ndarray
    params: RingParams
    h1_id: str = "keccak256-ctr/ring"
    h2_id: str = "keccak256-ctr/bits"

    @property
    def sigma(self) -> float:
        return self.params.sigma

    @property
    def mask_sigma(self) -> float:
        return MASK_FACTOR * math.sqrt(self.params.n) * self.params.sigma

    @property
    def norm_bound(self) -> float:
        return 2.0 * self.mask_sigma * math.sqrt(self.params.n)

    def to_bytes(self) -> bytes:
        p = self.params
        ids = (self.h1_id + "\x00" + self.h2_id).encode()
        return (
            b"PPRM"
            + struct.pack("<HHIIdd", 1, len(ids), p.n, p.q, p.sigma, p.s)
            + ids
            + ring.poly_to_bytes(self.h, p)
        )

    @classmethod
    def from_bytes(cls, buf: bytes) -> "PublicParams":
        buf = bytes(buf)
        if buf[:4] != b"PPRM":
            raise InvalidInputError("not a public-parameter file")
        version, idlen, n, q, sigma, s = struct.unpack("<HHIIdd", buf[4:32])
        if version != 1:
            raise InvalidInputError(f"unsupported version {version}")
        params = RingParams(n=n, q=q, sigma=sigma, s=s)
        h1_id, h2_id = buf[32:32 + idlen].decode().split("\x00")
        h = ring.poly_from_bytes(buf[32 + idlen:], params)
        return cls(h, params, h1_id, h2_id)

    def fingerprint(self) -> bytes:
        return ring.keccak256(self.to_bytes())


@dataclass(frozen=True)
class UserKey:
    did: str
    pk: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    s1_star: np.ndarray
    s2_star: np.ndarray

    @property
    def sk(self):
        return self.s1, self.s2, self.s1_star, self.s2_star


@dataclass(frozen=True)
class RingSignature:
    z_pairs: tuple
    v: np.ndarray
    link_tag: np.ndarray

    @property
    def ring_size(self) -> int:
        return len(self.z_pairs)


def make_did(raw: bytes) -> str:
    return DID_PREFIX + bytes(raw).hex()


def check_did(did: str) -> str:
    if not isinstance(did, str) or not _DID_RE.match(did):
        raise InvalidInputError(f"malformed DID {did!r}")
    return did


def h1(did: str, params: RingParams) -> np.ndarray:
    return ring.hash_to_ring(H1_TAG + did.encode("utf-8"), params)


def _lp(b: bytes) -> bytes:
    return struct.pack("<I", len(b)) + b


def h2(w, members, message: bytes, link_tag, params: RingParams) -> np.ndarray:
    enc_ring = struct.pack("<I", len(members)) + b"".join(_lp(d.encode("utf-8")) for d in sorted(members))
    data = (
        H2_TAG
        + _lp(ring.poly_to_bytes(w, params))
        + _lp(enc_ring)
        + _lp(bytes(message))
        + _lp(ring.poly_to_bytes(link_tag, params))
    )
    return ring.hash_to_bits(data, params.n)


def setup(security: int, ring_capacity: int, rng):
    """Key-authority setup: public parameters and the master trapdoor."""
    if not 2 <= ring_capacity <= MAX_RING:
        raise ParameterError(f"ring capacity must be in [2, {MAX_RING}]")
    td = ntru.trapgen(ring.preset_for_security(security), rng)
    return PublicParams(td.h, td.params), td


def keygen(pp: PublicParams, msk: NtruTrapdoor, did: str, rng) -> UserKey:
    check_did(did)
    params = pp.params
    t1 = h1(did, params)
    s1, s2 = ntru.gpv_sample_preimage(msk, t1, pp.sigma, rng)
    s1s = ring.sample_gaussian_vector(params.n, pp.sigma, rng)
    s2s = ring.sample_gaussian_vector(params.n, pp.sigma, rng)
    return UserKey(did, t1, s1, s2, s1s, s2s)


def link_tag(pp: PublicParams, key: UserKey) -> np.ndarray:
    params = pp.params
    t2 = ring.ring_add(key.s1_star % params.q, ring.ring_mul(key.s2_star % params.q, pp.h, params), params)
    return ring.ring_add(key.pk, t2, params)


def _check_ring(members):
    members = list(members)
    if len(members) < 2:
        raise InvalidInputError("ring needs at least two members")
    if len(members) > MAX_RING:
        raise InvalidInputError(f"ring larger than {MAX_RING}")
    if len(set(members)) != len(members):
        raise InvalidInputError("duplicate DID in ring")
    for d in members:
        check_did(d)
    return sorted(members)


def _commitment(z1s, z2s, pp):
    params = pp.params
    acc1 = np.sum(np.asarray(z1s), axis=0) % params.q
    acc2 = np.sum(np.asarray(z2s), axis=0) % params.q
    return ring.ring_add(acc1, ring.ring_mul(acc2, pp.h, params), params)


def sign(pp: PublicParams, members, message: bytes, key: UserKey, rng) -> RingSignature:
    params = pp.params
    q, n = params.q, params.n
    order = _check_ring(members)
    if key.did not in order:
        raise MembershipError(f"{key.did} is not in the ring")
    k = order.index(key.did)
    N = len(order)
    tag = link_tag(pp, key)
    a1 = (key.s1 + key.s1_star) % q
    a2 = (key.s2 + key.s2_star) % q
    bound = pp.norm_bound
    for _ in range(SIGN_ATTEMPTS):
        y = ring.sample_gaussian_vector(2 * N * n, pp.mask_sigma, rng).reshape(N, 2, n)
        y1, y2 = y[:, 0, :] % q, y[:, 1, :] % q
        v = h2(_commitment(y1, y2, pp), order, message, tag, params)
        z1, z2 = y1.copy(), y2.copy()
        z1[k] = (ring.ring_mul(a1, v, params) + y1[k]) % q
        z2[k] = (ring.ring_mul(a2, v, params) + y2[k]) % q
        if all(
            ring.euclidean_norm_centered(z1[i], params) <= bound
            and ring.euclidean_norm_centered(z2[i], params) <= bound
            for i in range(N)
        ):
            pairs = tuple((z1[i], z2[i]) for i in range(N))
            return RingSignature(pairs, v, tag)
    raise ParameterError("norm bound never met; masking width too small for these keys")


def verify(pp: PublicParams, members, message: bytes, sig: RingSignature) -> bool:
    params = pp.params
    try:
        order = _check_ring(members)
    except InvalidInputError:
        return False
    if not isinstance(sig, RingSignature) or sig.ring_size != len(order):
        return False
    v = np.asarray(sig.v)
    if v.shape != (params.n,) or np.any((v != 0) & (v != 1)):
        return False
    try:
        z1s = [ring.as_poly(z1, params) for z1, _ in sig.z_pairs]
        z2s = [ring.as_poly(z2, params) for _, z2 in sig.z_pairs]
        tag = ring.as_poly(sig.link_tag, params)
    except (InvalidInputError, ValueError, TypeError):
        return False
    bound = pp.norm_bound
    for z1, z2 in zip(z1s, z2s):
        if ring.euclidean_norm_centered(z1, params) > bound or ring.euclidean_norm_centered(z2, params) > bound:
            return False
    w = ring.ring_sub(_commitment(z1s, z2s, pp), ring.ring_mul(tag, v, params), params)
    return bool(np.array_equal(h2(w, order, message, tag, params), v))


def link(sig1: RingSignature, sig2: RingSignature) -> bool:
    return bool(np.array_equal(np.asarray(sig1.link_tag), np.asarray(sig2.link_tag)))


# ---------------------------------------------------------------------------
# wire format

SIG_MAGIC = b"NLRS"
SIG_VERSION = 1


def signature_to_bytes(sig: RingSignature, params: RingParams) -> bytes:
    out = [SIG_MAGIC, struct.pack("<HHII", SIG_VERSION, sig.ring_size, params.n, params.q)]
    for z1, z2 in sig.z_pairs:
        out.append(ring.signed_to_bytes(ring.centered(z1, params.q)))
        out.append(ring.signed_to_bytes(ring.centered(z2, params.q)))
    out.append(np.packbits(np.asarray(sig.v, dtype=np.uint8), bitorder="little").tobytes())
    out.append(ring.poly_to_bytes(sig.link_tag, params))
    return b"".join(out)


def signature_from_bytes(buf: bytes, params: RingParams) -> RingSignature:
    buf = bytes(buf)
    if len(buf) < 16 or buf[:4] != SIG_MAGIC:
        raise InvalidInputError("not a ring signature")
    version, N, n, q = struct.unpack("<HHII", buf[4:16])
    if version != SIG_VERSION or n != params.n or q != params.q:
        raise InvalidInputError("signature header does not match parameters")
    zlen = 4 * n
    vlen = n // 8
    ilen = n * params.coeff_bytes
    if len(buf) != 16 + 2 * N * zlen + vlen + ilen:
        raise InvalidInputError("signature length mismatch")
    off = 16
    pairs = []
    for _ in range(N):
        z1 = ring.signed_from_bytes(buf[off:off + zlen], n) % q
        z2 = ring.signed_from_bytes(buf[off + zlen:off + 2 * zlen], n) % q
        pairs.append((z1, z2))
        off += 2 * zlen
    v = np.unpackbits(np.frombuffer(buf[off:off + vlen], dtype=np.uint8), bitorder="little").astype(np.int64)
    off += vlen
    tag = ring.poly_from_bytes(buf[off:], params)
    return RingSignature(tuple(pairs), v, tag)


def userkey_to_bytes(key: UserKey, params: RingParams) -> bytes:
    did = key.did.encode("utf-8")
    return (
        b"NUSK"
        + _lp(did)
        + ring.poly_to_bytes(key.pk, params)
        + b"".join(ring.signed_to_bytes(x) for x in key.sk)
    )


def userkey_from_bytes(buf: bytes, params: RingParams) -> UserKey:
    buf = bytes(buf)
    if buf[:4] != b"NUSK":
        raise InvalidInputError("not a user key")
    (dlen,) = struct.unpack("<I", buf[4:8])
    did = buf[8:8 + dlen].decode("utf-8")
    off = 8 + dlen
    w = params.n * params.coeff_bytes
    pk = ring.poly_from_bytes(buf[off:off + w], params)
    off += w
    parts = []
    for _ in range(4):
        parts.append(ring.signed_from_bytes(buf[off:off + 4 * params.n], params.n))
        off += 4 * params.n
    if off != len(buf):
        raise InvalidInputError("trailing bytes in user key")
    return UserKey(check_did(did), pk, *parts)
