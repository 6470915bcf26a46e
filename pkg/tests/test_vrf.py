import numpy as np
import pytest

from pqvrf import ring, ringsig, rlwe, vrf
from pqvrf.errors import InvalidInputError, ParameterError
from pqvrf.proof import OUTPUT_LEN, SEED_LEN, VrfProof, proof_message


@pytest.fixture(scope="module")
def proof_and_output(small_km):
    bundle = small_km.delegate(1, ring.make_rng(7))
    seed = vrf.synthetic_seed(3)
    return seed, vrf.eval(seed, small_km, bundle, ring.make_rng(8))


def test_gen_shapes(small_km):
    assert len(small_km.participants) == 4
    assert all(d.endswith("#dkg") for d in small_km.delegation_ring)
    assert len(set(small_km.dids)) == 4
    assert small_km.kem_params == ring.RLWE_DEFAULT


def test_gen_limits(rng):
    with pytest.raises(ParameterError):
        vrf.gen(16, 1, rng)
    with pytest.raises(ParameterError):
        vrf.gen(16, ringsig.MAX_RING + 1, rng)


def test_eval_and_ver(small_km, proof_and_output):
    seed, (out, proof) = proof_and_output
    assert len(out) == OUTPUT_LEN and proof.vrf_output == out and proof.seed == seed
    assert vrf.ver(proof, small_km.delegation_ring, small_km.pp)


def test_output_is_deterministic_function_of_seed_and_key(small_km, proof_and_output):
    seed, (out, _) = proof_and_output
    # a different delegate, different signing randomness: same output
    out2, proof2 = vrf.eval(seed, small_km, small_km.delegate(2, ring.make_rng(70)), ring.make_rng(71))
    assert out2 == out
    assert vrf.ver(proof2, small_km.delegation_ring, small_km.pp)
    assert vrf.eval_output(vrf.synthetic_seed(4), small_km.rlwe)[0] != out
    other = rlwe.rlwe_keygen(small_km.kem_params, ring.make_rng(72))
    assert vrf.eval_output(seed, other)[0] != out


def test_output_decrypts_to_seed_message(small_km):
    seed = vrf.synthetic_seed(9)
    out, ct = vrf.eval_output(seed, small_km.rlwe)
    p = small_km.kem_params
    assert np.array_equal(rlwe.rlwe_dec(ct, small_km.rlwe.secret_s, p), rlwe.seed_to_message(seed, p))
    assert out == ring.keccak256(ct.coefficient_bytes())


def test_ver_rejects_forgeries(small_km, proof_and_output):
    seed, (out, proof) = proof_and_output
    ring_ = small_km.delegation_ring
    pp = small_km.pp
    flipped = bytes([out[0] ^ 1]) + out[1:]
    assert not vrf.ver(VrfProof(flipped, seed, proof.sigma), ring_, pp)
    assert not vrf.ver(VrfProof(out, vrf.synthetic_seed(4), proof.sigma), ring_, pp)
    assert not vrf.ver(VrfProof(out[:31], seed, proof.sigma), ring_, pp)
    assert not vrf.ver(proof, small_km.dids, pp)
    assert not vrf.ver("junk", ring_, pp)


def test_eval_rejects_bad_seed(small_km):
    with pytest.raises(InvalidInputError):
        vrf.eval(b"short", small_km, small_km.delegate(0, ring.make_rng(1)), ring.make_rng(2))


def test_proof_wire_format(small_km, proof_and_output):
    _, (_, proof) = proof_and_output
    p = small_km.pp.params
    buf = proof.to_bytes(p)
    back = VrfProof.from_bytes(buf, p)
    assert back.seed == proof.seed and back.vrf_output == proof.vrf_output
    assert vrf.ver(back, small_km.delegation_ring, small_km.pp)
    for bad in (b"XXXX" + buf[4:], buf[:20], buf[:4] + b"\x02\x00" + buf[6:]):
        with pytest.raises(InvalidInputError):
            VrfProof.from_bytes(bad, p)


def test_proof_message_is_unambiguous():
    assert proof_message(b"ab", b"c") != proof_message(b"a", b"bc")


def test_synthetic_seed_layout():
    s = vrf.synthetic_seed(5, b"\x11" * 20)
    assert len(s) == SEED_LEN
    assert int.from_bytes(s[:32], "big") == 5
    assert s[64:84] == b"\x11" * 20


def test_output_stream(small_km):
    stream = vrf.output_stream(small_km.rlwe, 4, start=2)
    assert len(stream) == 128
    assert stream[32:64] == vrf.eval_output(vrf.synthetic_seed(3), small_km.rlwe)[0]
