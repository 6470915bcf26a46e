import math

import numpy as np
import pytest

from pqvrf import ring, ringsig
from pqvrf.errors import InvalidInputError, MembershipError, ParameterError


@pytest.fixture(scope="module")
def setup(small_pp, small_keys):
    pp, _ = small_pp
    return pp, small_keys, [k.did for k in small_keys]


def test_key_relations(small_pp, small_keys):
    pp, _ = small_pp
    p = pp.params
    for key in small_keys:
        assert np.array_equal(key.pk, ringsig.h1(key.did, p))
        assert np.array_equal((key.s1 + ring.ring_mul(key.s2 % p.q, pp.h, p)) % p.q, key.pk)


def test_every_signer_verifies(setup, rng):
    pp, keys, dids = setup
    for key in keys:
        sig = ringsig.sign(pp, dids, b"msg", key, rng)
        assert sig.ring_size == len(dids)
        assert ringsig.verify(pp, dids, b"msg", sig)
        assert ringsig.verify(pp, list(reversed(dids)), b"msg", sig)  # ring order is canonical


def test_two_member_ring(setup, rng):
    pp, keys, dids = setup
    sig = ringsig.sign(pp, dids[:2], b"x", keys[1], rng)
    assert ringsig.verify(pp, dids[:2], b"x", sig)


def test_wrong_message_or_ring_fails(setup, rng):
    pp, keys, dids = setup
    sig = ringsig.sign(pp, dids[:4], b"msg", keys[0], rng)
    assert not ringsig.verify(pp, dids[:4], b"msh", sig)
    assert not ringsig.verify(pp, dids[1:5], b"msg", sig)
    assert not ringsig.verify(pp, dids[:3], b"msg", sig)
    assert not ringsig.verify(pp, dids[:4] + dids[:1], b"msg", sig)


def test_tampering_detected(setup, rng):
    pp, keys, dids = setup
    p = pp.params
    sig = ringsig.sign(pp, dids[:4], b"msg", keys[2], rng)
    for i in range(4):
        z1, z2 = sig.z_pairs[i]
        bumped = z1.copy()
        bumped[i] = (bumped[i] + 1) % p.q
        pairs = list(sig.z_pairs)
        pairs[i] = (bumped, z2)
        assert not ringsig.verify(pp, dids[:4], b"msg", ringsig.RingSignature(tuple(pairs), sig.v, sig.link_tag))
    v = sig.v.copy()
    v[0] ^= 1
    assert not ringsig.verify(pp, dids[:4], b"msg", ringsig.RingSignature(sig.z_pairs, v, sig.link_tag))
    tag = (sig.link_tag + 1) % p.q
    assert not ringsig.verify(pp, dids[:4], b"msg", ringsig.RingSignature(sig.z_pairs, sig.v, tag))
    assert not ringsig.verify(pp, dids[:4], b"msg", "not a signature")


def test_oversized_response_rejected(setup, rng):
    pp, keys, dids = setup
    p = pp.params
    sig = ringsig.sign(pp, dids[:2], b"m", keys[0], rng)
    big = np.zeros(p.n, dtype=np.int64)
    big[0] = int(pp.norm_bound) + 1
    pairs = ((big, sig.z_pairs[0][1]), sig.z_pairs[1])
    assert not ringsig.verify(pp, dids[:2], b"m", ringsig.RingSignature(pairs, sig.v, sig.link_tag))


def test_linkability(setup, rng):
    pp, keys, dids = setup
    a = ringsig.sign(pp, dids[:4], b"one", keys[0], rng)
    b = ringsig.sign(pp, dids[:4], b"two", keys[0], rng)
    c = ringsig.sign(pp, dids[:4], b"one", keys[1], rng)
    d = ringsig.sign(pp, dids[4:], b"three", keys[4], rng)
    e = ringsig.sign(pp, dids[2:6], b"four", keys[4], rng)
    assert ringsig.link(a, b)
    assert not ringsig.link(a, c)
    assert ringsig.link(d, e)  # the tag does not depend on the ring
    assert not ringsig.link(c, d)


def test_non_member_cannot_sign(setup, rng):
    pp, keys, dids = setup
    with pytest.raises(MembershipError):
        ringsig.sign(pp, dids[1:4], b"m", keys[0], rng)
    with pytest.raises(InvalidInputError):
        ringsig.sign(pp, [dids[0]], b"m", keys[0], rng)
    with pytest.raises(InvalidInputError):
        ringsig.sign(pp, [dids[0], dids[0]], b"m", keys[0], rng)
    with pytest.raises(InvalidInputError):
        ringsig.sign(pp, [dids[0], "bogus"], b"m", keys[0], rng)


def test_anonymity_response_norms(setup, rng):
    """The signer's slot is not revealed by the size of its response."""
    pp, keys, dids = setup
    ring4 = dids[:4]
    order = sorted(ring4)
    p = pp.params
    per_slot = {i: [] for i in range(4)}
    signer_slot = []
    for t in range(40):
        key = keys[t % 4]
        sig = ringsig.sign(pp, ring4, b"anon %d" % t, key, rng)
        k = order.index(key.did)
        signer_slot.append(ring.euclidean_norm_centered(sig.z_pairs[k][0], p))
        for i in range(4):
            if i != k:
                per_slot[i].append(ring.euclidean_norm_centered(sig.z_pairs[i][0], p))
    others = np.concatenate([per_slot[i] for i in range(4)])
    # both follow the masking Gaussian norm mask_sigma * sqrt(n) within a few percent
    expect = pp.mask_sigma * math.sqrt(p.n)
    assert np.mean(signer_slot) == pytest.approx(expect, rel=0.05)
    assert np.mean(others) == pytest.approx(expect, rel=0.05)
    assert abs(np.mean(signer_slot) - np.mean(others)) < 4 * np.std(others) / math.sqrt(len(signer_slot))


def test_serialization(setup, rng):
    pp, keys, dids = setup
    p = pp.params
    sig = ringsig.sign(pp, dids[:3], b"ser", keys[0], rng)
    buf = ringsig.signature_to_bytes(sig, p)
    back = ringsig.signature_from_bytes(buf, p)
    assert ringsig.verify(pp, dids[:3], b"ser", back)
    with pytest.raises(InvalidInputError):
        ringsig.signature_from_bytes(buf[:-1], p)
    key = ringsig.userkey_from_bytes(ringsig.userkey_to_bytes(keys[0], p), p)
    assert key.did == keys[0].did and all(np.array_equal(a, b) for a, b in zip(key.sk, keys[0].sk))
    pp2 = ringsig.PublicParams.from_bytes(pp.to_bytes())
    assert pp2.params == p and np.array_equal(pp2.h, pp.h)
    assert pp2.fingerprint() == pp.fingerprint()


def test_did_format():
    d = ringsig.make_did(b"\x01\x02")
    assert d == "did:pqvrf:0102"
    assert ringsig.check_did(d + "#dkg#2") == d + "#dkg#2"
    for bad in ("did:other:00", "did:pqvrf:", "did:pqvrf:zz", 5):
        with pytest.raises(InvalidInputError):
            ringsig.check_did(bad)


def test_setup_capacity_limits(rng):
    with pytest.raises(ParameterError):
        ringsig.setup(16, 1, rng)
    with pytest.raises(ParameterError):
        ringsig.setup(16, ringsig.MAX_RING + 1, rng)
