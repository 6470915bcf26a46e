"""Gen / Eval / Ver façade over the ring signature, RLWE and delegation layers."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import dkg, ring, ringsig, rlwe
from .errors import InvalidInputError, ParameterError
from .ntru import NtruTrapdoor
from .proof import OUTPUT_LEN, SEED_LEN, VrfProof, proof_message
from .ring import RingParams
from .ringsig import PublicParams
from .rlwe import RlweKeyPair

__all__ = ["VrfKeyMaterial", "VrfProof", "gen", "eval_output", "eval", "ver", "proof_message"]


@dataclass
class VrfKeyMaterial:
    pp: PublicParams
    msk: NtruTrapdoor
    rlwe: RlweKeyPair
    participants: list = field(default_factory=list)  # (onchain, delegation) UserKey pairs

    @property
    def kem_params(self) -> RingParams:
        return self.rlwe.params

    @property
    def dids(self):
        return [on.did for on, _ in self.participants]

    @property
    def delegation_ring(self):
        return [dl.did for _, dl in self.participants]

    def delegate(self, index: int, rng) -> dkg.DelegationBundle:
        _, delegation = self.participants[index]
        return dkg.delegate_key(delegation, self.rlwe.public, self.kem_params, self.pp, rng)


def participant_did(index: int) -> str:
    return ringsig.make_did(ring.keccak256(b"participant" + index.to_bytes(4, "big"))[:16])


def gen(security: int, participant_count: int, rng, rlwe_params: RingParams = ring.RLWE_DEFAULT) -> VrfKeyMaterial:
    if participant_count < 2:
        raise ParameterError("need at least two participants")
    if participant_count > ringsig.MAX_RING:
        raise ParameterError(f"at most {ringsig.MAX_RING} participants")
    pp, msk = ringsig.setup(security, max(participant_count, 2), rng)
    kp = rlwe.rlwe_keygen(rlwe_params, rng)
    parts = [dkg.generate_keys(pp, msk, participant_did(i), rng) for i in range(participant_count)]
    return VrfKeyMaterial(pp, msk, kp, parts)


def eval_output(seed: bytes, kp: RlweKeyPair):
    """VRF output and ciphertext for ``seed``; a pure function of (seed, sk)."""
    seed = bytes(seed)
    params = kp.params
    enc_rng = ring.make_rng(ring.keccak256(seed + rlwe.secret_to_bytes(kp)))
    ct = rlwe.rlwe_enc2(rlwe.seed_to_message(seed, params), kp.public, params, enc_rng)
    return ring.keccak256(ct.coefficient_bytes()), ct


def eval(seed: bytes, km: VrfKeyMaterial, delegation: dkg.DelegationBundle, rng):
    seed = bytes(seed)
    if len(seed) != SEED_LEN:
        raise InvalidInputError(f"seed must be {SEED_LEN} bytes, got {len(seed)}")
    out, _ = eval_output(seed, km.rlwe)
    proof = dkg.offchain_sign(km.rlwe, delegation, seed, out, km.delegation_ring, rng)
    return out, proof


def ver(proof: VrfProof, members, pp: PublicParams) -> bool:
    if not isinstance(proof, VrfProof):
        return False
    if len(proof.vrf_output) != OUTPUT_LEN or len(proof.seed) != SEED_LEN:
        return False
    return ringsig.verify(pp, members, proof.message, proof.sigma)


def synthetic_seed(index: int, sender: bytes = bytes(20)) -> bytes:
    """A well-formed 148-byte seed for block ``index`` without running the chain."""
    combined = ring.keccak256(b"block" + index.to_bytes(8, "big"))
    result = ring.keccak256(b"mpc" + index.to_bytes(8, "big"))
    return (
        index.to_bytes(32, "big")
        + (1_700_000_000 + 12 * index).to_bytes(32, "big")
        + bytes(sender)
        + combined
        + result
    )


def output_stream(kp: RlweKeyPair, count: int, start: int = 0) -> bytes:
    """Concatenated VRF outputs for ``count`` consecutive synthetic seeds."""
    return b"".join(eval_output(synthetic_seed(i), kp)[0] for i in range(start, start + count))
