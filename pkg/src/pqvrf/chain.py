"""A deterministic simulated chain hosting the MPC seed contract, plus the
off-chain worker that answers seed-ready events with a VRF proof.

The chain is a single-writer state machine; a lock serializes every
transaction. A newline-delimited JSON protocol exposes it over local TCP and
an in-process client skips the socket for tests.
"""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
from dataclasses import dataclass, field
from enum import Enum

from . import dkg, ring, ringsig, vrf
from .errors import InvalidInputError, IntegrityError, MembershipError, PqvrfError, RejectedError
from .proof import SEED_LEN, VrfProof
from .ring import RingParams
from .ringsig import PublicParams

log = logging.getLogger(__name__)

MOD = 1 << 256
DEFAULT_ENDPOINT = "127.0.0.1:8545"

SEED_READY = "OnchainMpcSeedReady"
FINISHED = "ComputationFinished"


class Phase(str, Enum):
    REGISTERING = "Registering"
    SEED_READY = "SeedReady"
    PROOF_SUBMITTED = "ProofSubmitted"
    FINISHED = "Finished"
    ABORTED = "Aborted"


_NEXT = {
    Phase.REGISTERING: {Phase.SEED_READY, Phase.ABORTED},
    Phase.SEED_READY: {Phase.PROOF_SUBMITTED, Phase.ABORTED},
    Phase.PROOF_SUBMITTED: {Phase.FINISHED, Phase.ABORTED},
    Phase.FINISHED: set(),
    Phase.ABORTED: set(),
}


def block_hash(number: int, timestamp: int, parent: bytes) -> bytes:
    return ring.keccak256(number.to_bytes(32, "big") + timestamp.to_bytes(32, "big") + parent)


def combined_block_hash(hashes) -> bytes:
    return ring.keccak256(b"".join(hashes))


def mpc_result(participants) -> int:
    """Weighted commitment mean with all sums reduced mod 2^256 before the division."""
    wsum = 0
    ssum = 0
    for p in participants:
        ch = int.from_bytes(ring.keccak256(p.commitment), "big")
        wsum = (wsum + (ch * p.share) % MOD) % MOD
        ssum = (ssum + p.share) % MOD
    if ssum == 0:
        raise RejectedError("share sum is zero", code="precondition")
    return wsum // ssum


def encode_seed(number: int, timestamp: int, sender: bytes, combined: bytes, result: int) -> bytes:
    return (
        number.to_bytes(32, "big")
        + timestamp.to_bytes(32, "big")
        + bytes(sender)
        + bytes(combined)
        + result.to_bytes(32, "big")
    )


@dataclass(frozen=True)
class Block:
    number: int
    timestamp: int
    hash: bytes
    parent: bytes


@dataclass
class Participant:
    addr: bytes
    share: int
    commitment: bytes
    did: str | None = None
    dkg_did: str | None = None


@dataclass
class Member:
    """A registered participant identity and its current delegation."""

    addr: bytes
    did: str
    dkg_did: str
    bundle: bytes
    generation: int = 0
    revoked: list = field(default_factory=list)


@dataclass(frozen=True)
class Event:
    index: int
    kind: str
    round_id: int
    block_number: int
    payload: bytes

    def to_json(self):
        return {
            "index": self.index,
            "kind": self.kind,
            "round_id": self.round_id,
            "block_number": self.block_number,
            "payload": to_hex(self.payload),
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["index"], d["kind"], d["round_id"], d["block_number"], from_hex(d["payload"]))


@dataclass
class RoundState:
    round_id: int
    phase: Phase = Phase.REGISTERING
    participants: list = field(default_factory=list)
    onchain_seed: bytes | None = None
    delegation_ring: list = field(default_factory=list)
    delegate: str | None = None  # on-chain DID whose bundle the worker uses
    bundle: bytes | None = None
    proof: bytes | None = None
    history: list = field(default_factory=lambda: [Phase.REGISTERING])
    events: list = field(default_factory=list)

    def move(self, phase: Phase):
        if phase not in _NEXT[self.phase]:
            raise RejectedError(f"round {self.round_id}: {self.phase.value} -> {phase.value} not allowed", code="phase")
        self.phase = phase
        self.history.append(phase)


def to_hex(b: bytes) -> str:
    return "0x" + bytes(b).hex()


def from_hex(s) -> bytes:
    if not isinstance(s, str) or not s.startswith("0x"):
        raise InvalidInputError(f"expected 0x-prefixed hex, got {s!r}")
    try:
        return bytes.fromhex(s[2:])
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from exc


def _addr(a) -> bytes:
    a = from_hex(a) if isinstance(a, str) else bytes(a)
    if len(a) != 20:
        raise RejectedError("address must be 20 bytes", code="invalid")
    return a


class ChainSim:
    def __init__(self, pp: PublicParams, kem_params: RingParams = ring.RLWE_DEFAULT,
                 genesis_timestamp: int = 0, epoch_length: int = 1):
        if epoch_length < 1:
            raise InvalidInputError("epoch length must be positive")
        self.pp = pp
        self.kem_params = kem_params
        self.epoch_length = epoch_length
        self.blocks = [Block(0, genesis_timestamp, block_hash(0, genesis_timestamp, bytes(32)), bytes(32))]
        self.rounds: dict[int, RoundState] = {}
        self.members: dict[bytes, Member] = {}
        self.events: list[Event] = []
        self.link_tags: dict[int, dict[bytes, int]] = {}  # epoch -> tag -> round
        self.lock = threading.RLock()

    # -- blocks -------------------------------------------------------------

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    def advance_block(self, timestamp: int) -> Block:
        with self.lock:
            if timestamp < self.head.timestamp:
                raise RejectedError("timestamp goes backwards", code="time")
            number = self.head.number + 1
            b = Block(number, timestamp, block_hash(number, timestamp, self.head.hash), self.head.hash)
            self.blocks.append(b)
            return b

    def _emit(self, rs: RoundState, kind: str, payload: bytes) -> Event:
        ev = Event(len(self.events), kind, rs.round_id, self.head.number, payload)
        self.events.append(ev)
        rs.events.append(ev.index)
        return ev

    # -- delegation registry --------------------------------------------------

    def _check_bundle(self, bundle: bytes):
        try:
            dkg.DelegationBundle.from_bytes(bundle, self.pp, self.kem_params)
        except IntegrityError as exc:
            raise RejectedError(f"bad delegation bundle: {exc}", code="integrity") from exc

    def submit_delegation(self, addr, did: str, dkg_did: str, bundle: bytes):
        with self.lock:
            addr = _addr(addr)
            try:
                ringsig.check_did(did)
                ringsig.check_did(dkg_did)
            except InvalidInputError as exc:
                raise RejectedError(str(exc), code="invalid") from exc
            if addr in self.members:
                raise RejectedError("address already has a delegation", code="duplicate")
            if any(m.did == did or m.dkg_did == dkg_did for m in self.members.values()):
                raise RejectedError("identity already registered", code="duplicate")
            self._check_bundle(bundle)
            self.members[addr] = Member(addr, did, dkg_did, bytes(bundle))
            return {"ok": True}

    def replace_delegation(self, addr, dkg_did: str, bundle: bytes):
        """Revoke the current delegation key and install a new one."""
        with self.lock:
            addr = _addr(addr)
            m = self.members.get(addr)
            if m is None:
                raise RejectedError("no delegation to replace", code="unknown")
            try:
                ringsig.check_did(dkg_did)
            except InvalidInputError as exc:
                raise RejectedError(str(exc), code="invalid") from exc
            used = {x.dkg_did for x in self.members.values()} | {d for x in self.members.values() for d in x.revoked}
            if dkg_did in used:
                raise RejectedError("delegation identity was already used", code="duplicate")
            self._check_bundle(bundle)
            m.revoked.append(m.dkg_did)
            m.dkg_did = dkg_did
            m.bundle = bytes(bundle)
            m.generation += 1
            return {"ok": True, "generation": m.generation}

    # -- rounds ---------------------------------------------------------------

    def _round(self, round_id: int, create: bool = False) -> RoundState:
        rs = self.rounds.get(round_id)
        if rs is None:
            if not create:
                raise RejectedError(f"unknown round {round_id}", code="unknown")
            if not isinstance(round_id, int) or round_id < 0:
                raise RejectedError("round id must be a non-negative integer", code="invalid")
            rs = self.rounds[round_id] = RoundState(round_id)
        return rs

    def submit_commitment(self, round_id: int, addr, share: int, commitment: bytes):
        with self.lock:
            addr = _addr(addr)
            commitment = bytes(commitment)
            if not isinstance(share, int) or share <= 0 or share >= MOD:
                raise RejectedError("share must be a positive 256-bit integer", code="invalid")
            if len(commitment) != 32:
                raise RejectedError("commitment must be 32 bytes", code="invalid")
            rs = self._round(round_id, create=True)
            if rs.phase != Phase.REGISTERING:
                raise RejectedError(f"round {round_id} is not registering", code="phase")
            if any(p.addr == addr for p in rs.participants):
                raise RejectedError("participant already registered", code="duplicate")
            m = self.members.get(addr)
            rs.participants.append(Participant(addr, share, commitment, m and m.did, m and m.dkg_did))
            return {"ok": True, "participants": len(rs.participants)}

    def compute_onchain_seed(self, round_id: int, sender) -> bytes:
        with self.lock:
            sender = _addr(sender)
            rs = self._round(round_id)
            if rs.phase != Phase.REGISTERING:
                raise RejectedError(f"round {round_id} is not registering", code="phase")
            if len(rs.participants) < 2:
                raise RejectedError("need at least two participants", code="precondition")
            if len(self.blocks) < 3:
                raise RejectedError("fewer than three blocks; retry on a later block", code="retry")
            combined = combined_block_hash(b.hash for b in self.blocks[-3:])
            if int.from_bytes(combined, "big") == 0:
                raise RejectedError("combined block hash is zero; retry on the next block", code="retry")
            seed = encode_seed(self.head.number, self.head.timestamp, sender, combined, mpc_result(rs.participants))
            rs.onchain_seed = seed
            members = [self.members[p.addr] for p in rs.participants if p.addr in self.members]
            rs.delegation_ring = sorted(m.dkg_did for m in members)
            if len(members) >= 2:
                d = members[round_id % len(members)]
                rs.delegate, rs.bundle = d.did, d.bundle
            rs.move(Phase.SEED_READY)
            self._emit(rs, SEED_READY, seed + sender + self.pp.fingerprint())
            return seed

    def submit_rlwe_result(self, round_id: int, proof: bytes, members):
        with self.lock:
            rs = self._round(round_id)
            if rs.phase != Phase.SEED_READY:
                raise RejectedError(f"round {round_id} is not awaiting a proof", code="phase")
            try:
                pi = VrfProof.from_bytes(proof, self.pp.params)
            except InvalidInputError as exc:
                raise RejectedError(f"malformed proof: {exc}", code="invalid") from exc
            if pi.seed != rs.onchain_seed:
                raise RejectedError("proof seed does not match the round seed", code="seed")
            if sorted(members) != rs.delegation_ring:
                raise RejectedError("ring is not the round's delegation ring", code="ring")
            if not vrf.ver(pi, rs.delegation_ring, self.pp):
                raise RejectedError("ring signature does not verify", code="signature")
            epoch = round_id // self.epoch_length
            tag = ring.poly_to_bytes(pi.sigma.link_tag, self.pp.params)
            prior = self.link_tags.setdefault(epoch, {}).get(tag)
            if prior is not None:
                raise RejectedError(f"delegate already signed round {prior} in this epoch", code="double-sign")
            self.link_tags[epoch][tag] = round_id
            rs.move(Phase.PROOF_SUBMITTED)
            rs.proof = bytes(proof)
            rs.move(Phase.FINISHED)
            self._emit(rs, FINISHED, bytes(proof))
            return {"ok": True, "vrf_output": to_hex(pi.vrf_output)}

    def abort_round(self, round_id: int):
        with self.lock:
            rs = self._round(round_id)
            rs.move(Phase.ABORTED)
            return {"ok": True}

    # -- reads ----------------------------------------------------------------

    def get_events(self, from_block: int = 0):
        with self.lock:
            return [e for e in self.events if e.block_number >= from_block]

    def get_round(self, round_id: int) -> dict:
        with self.lock:
            return self._round_json(self._round(round_id))

    def _round_json(self, rs: RoundState) -> dict:
        return {
            "round_id": rs.round_id,
            "phase": rs.phase.value,
            "history": [p.value for p in rs.history],
            "participants": [
                {"addr": to_hex(p.addr), "share": hex(p.share), "commitment": to_hex(p.commitment),
                 "did": p.did, "dkg_did": p.dkg_did}
                for p in rs.participants
            ],
            "onchain_seed": rs.onchain_seed and to_hex(rs.onchain_seed),
            "delegation_ring": list(rs.delegation_ring),
            "delegate": rs.delegate,
            "bundle": rs.bundle and to_hex(rs.bundle),
            "proof": rs.proof and to_hex(rs.proof),
            "events": list(rs.events),
        }

    # -- snapshot -------------------------------------------------------------

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "pp": to_hex(self.pp.to_bytes()),
                "kem_params": [self.kem_params.n, self.kem_params.q, self.kem_params.sigma],
                "epoch_length": self.epoch_length,
                "blocks": [[b.number, b.timestamp, to_hex(b.hash), to_hex(b.parent)] for b in self.blocks],
                "members": [
                    {"addr": to_hex(m.addr), "did": m.did, "dkg_did": m.dkg_did, "bundle": to_hex(m.bundle),
                     "generation": m.generation, "revoked": m.revoked}
                    for m in self.members.values()
                ],
                "rounds": [self._round_json(rs) for rs in self.rounds.values()],
                "events": [e.to_json() for e in self.events],
                "link_tags": {str(ep): {to_hex(t): r for t, r in tags.items()} for ep, tags in self.link_tags.items()},
            }

    @classmethod
    def restore(cls, snap: dict) -> "ChainSim":
        pp = PublicParams.from_bytes(from_hex(snap["pp"]))
        n, q, sigma = snap["kem_params"]
        chain = cls(pp, RingParams(n=n, q=q, sigma=sigma, s=sigma), epoch_length=snap["epoch_length"])
        chain.blocks = [Block(nu, ts, from_hex(h), from_hex(p)) for nu, ts, h, p in snap["blocks"]]
        for m in snap["members"]:
            a = from_hex(m["addr"])
            chain.members[a] = Member(a, m["did"], m["dkg_did"], from_hex(m["bundle"]), m["generation"], list(m["revoked"]))
        for r in snap["rounds"]:
            rs = RoundState(r["round_id"], Phase(r["phase"]))
            rs.history = [Phase(p) for p in r["history"]]
            rs.participants = [
                Participant(from_hex(p["addr"]), int(p["share"], 16), from_hex(p["commitment"]), p["did"], p["dkg_did"])
                for p in r["participants"]
            ]
            rs.onchain_seed = r["onchain_seed"] and from_hex(r["onchain_seed"])
            rs.delegation_ring = list(r["delegation_ring"])
            rs.delegate = r["delegate"]
            rs.bundle = r["bundle"] and from_hex(r["bundle"])
            rs.proof = r["proof"] and from_hex(r["proof"])
            rs.events = list(r["events"])
            chain.rounds[rs.round_id] = rs
        chain.events = [Event.from_json(e) for e in snap["events"]]
        chain.link_tags = {int(ep): {from_hex(t): r for t, r in tags.items()} for ep, tags in snap["link_tags"].items()}
        return chain

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.snapshot(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ChainSim":
        with open(path) as fh:
            return cls.restore(json.load(fh))

    # -- wire dispatch ----------------------------------------------------------

    def dispatch(self, method: str, params: dict):
        """Run one wire request; binary arguments and results are 0x-hex."""
        p = dict(params or {})
        if method == "submit_commitment":
            return self.submit_commitment(int(p["round_id"]), p["addr"], _int(p["share"]), from_hex(p["commitment"]))
        if method == "compute_onchain_seed":
            return {"onchain_seed": to_hex(self.compute_onchain_seed(int(p["round_id"]), p["sender"]))}
        if method == "submit_rlwe_result":
            return self.submit_rlwe_result(int(p["round_id"]), from_hex(p["proof"]), list(p["ring"]))
        if method == "advance_block":
            b = self.advance_block(int(p["timestamp"]))
            return {"number": b.number, "timestamp": b.timestamp, "hash": to_hex(b.hash)}
        if method == "get_events":
            return [e.to_json() for e in self.get_events(int(p.get("from_block", 0)))]
        if method == "get_round":
            return self.get_round(int(p["round_id"]))
        if method == "submit_delegation":
            return self.submit_delegation(p["addr"], p["did"], p["dkg_did"], from_hex(p["bundle"]))
        if method == "replace_delegation":
            return self.replace_delegation(p["addr"], p["dkg_did"], from_hex(p["bundle"]))
        if method == "abort_round":
            return self.abort_round(int(p["round_id"]))
        if method == "head":
            b = self.head
            return {"number": b.number, "timestamp": b.timestamp, "hash": to_hex(b.hash)}
        raise RejectedError(f"unknown method {method!r}", code="method")


def _int(x) -> int:
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        return int(x, 16) if x.startswith("0x") else int(x)
    raise RejectedError("expected an integer", code="invalid")


def handle_line(chain: ChainSim, line: str) -> str:
    rid = None
    try:
        req = json.loads(line)
        rid = req.get("id")
        result = chain.dispatch(req["method"], req.get("params") or {})
        resp = {"id": rid, "result": result}
    except RejectedError as exc:
        resp = {"id": rid, "error": {"code": exc.code, "message": str(exc)}}
    except (PqvrfError, KeyError, ValueError, TypeError) as exc:
        resp = {"id": rid, "error": {"code": "invalid", "message": f"{type(exc).__name__}: {exc}"}}
    return json.dumps(resp)


# ---------------------------------------------------------------------------
# transport


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            self.wfile.write((handle_line(self.server.chain, line) + "\n").encode())
            self.wfile.flush()


class ChainServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, chain: ChainSim, endpoint: str = DEFAULT_ENDPOINT):
        host, port = parse_endpoint(endpoint)
        super().__init__((host, port), _Handler)
        self.chain = chain

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> threading.Thread:
        t = threading.Thread(target=self.serve_forever, daemon=True)
        t.start()
        return t


def parse_endpoint(endpoint: str):
    host, _, port = endpoint.rpartition(":")
    if not host or not port.isdigit():
        raise InvalidInputError(f"endpoint must be host:port, got {endpoint!r}")
    return host, int(port)


class _ClientBase:
    def call(self, method: str, **params):
        raise NotImplementedError

    def __getattr__(self, name):
        if name.startswith("_"):
            raise AttributeError(name)
        return lambda **kw: self.call(name, **kw)


def _unwrap(resp: dict):
    if "error" in resp:
        err = resp["error"]
        raise RejectedError(err["message"], code=err["code"])
    return resp["result"]


class InProcessClient(_ClientBase):
    """Goes through the same JSON encoding as the TCP client, minus the socket."""

    def __init__(self, chain: ChainSim):
        self.chain = chain
        self._id = 0

    def call(self, method: str, **params):
        self._id += 1
        line = json.dumps({"id": self._id, "method": method, "params": params})
        return _unwrap(json.loads(handle_line(self.chain, line)))


class TcpClient(_ClientBase):
    def __init__(self, endpoint: str = DEFAULT_ENDPOINT, timeout: float = 30.0):
        self.endpoint = endpoint
        self.sock = socket.create_connection(parse_endpoint(endpoint), timeout=timeout)
        self.rfile = self.sock.makefile("rb")
        self._id = 0

    def call(self, method: str, **params):
        self._id += 1
        msg = json.dumps({"id": self._id, "method": method, "params": params}) + "\n"
        self.sock.sendall(msg.encode())
        line = self.rfile.readline()
        if not line:
            raise ConnectionError("chain endpoint closed the connection")
        resp = json.loads(line)
        if resp.get("id") != self._id:
            raise ConnectionError("response id mismatch")
        return _unwrap(resp)

    def close(self):
        self.rfile.close()
        self.sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------------------------------------------------------------------------
# off-chain worker


@dataclass
class WorkerResult:
    round_id: int
    ok: bool
    detail: str


class Worker:
    """Listens for seed-ready events and submits RLWE results with proofs."""

    def __init__(self, client, rlwe_keypair, pp: PublicParams, seed: bytes = b"worker"):
        self.client = client
        self.kp = rlwe_keypair
        self.pp = pp
        self.seed = bytes(seed)
        self.next_event = 0
        self.from_block = 0

    def round_rng(self, round_id: int):
        return ring.make_rng(ring.keccak256(self.seed + round_id.to_bytes(8, "big")))

    def poll_once(self):
        results = []
        for ev in self.client.get_events(from_block=self.from_block):
            ev = Event.from_json(ev)
            if ev.index < self.next_event:
                continue
            self.next_event = ev.index + 1
            self.from_block = ev.block_number
            if ev.kind == SEED_READY:
                r = self.handle(ev)
                if r is not None:
                    results.append(r)
        return results

    def handle(self, ev: Event):
        info = self.client.get_round(round_id=ev.round_id)
        if info["phase"] != Phase.SEED_READY.value:
            return None
        rid = ev.round_id
        if info["bundle"] is None:
            log.warning("round %d has no delegated participant", rid)
            return WorkerResult(rid, False, "no delegation bundle")
        seed = from_hex(info["onchain_seed"])
        if seed != ev.payload[:SEED_LEN]:
            return WorkerResult(rid, False, "event seed differs from stored seed")
        members = info["delegation_ring"]
        try:
            bundle = dkg.DelegationBundle.from_bytes(from_hex(info["bundle"]), self.pp, self.kp.params)
            out, _ = vrf.eval_output(seed, self.kp)
        except PqvrfError as exc:
            log.error("RLWE encryption failed with error: %s", exc)
            return WorkerResult(rid, False, f"encryption failed: {exc}")
        try:
            proof = dkg.offchain_sign(self.kp, bundle, seed, out, members, self.round_rng(rid))
        except (IntegrityError, MembershipError) as exc:
            log.error("round %d: cannot sign: %s", rid, exc)
            return WorkerResult(rid, False, f"signing failed: {exc}")
        try:
            self.client.submit_rlwe_result(
                round_id=rid, proof=to_hex(proof.to_bytes(self.pp.params)), ring=members
            )
        except RejectedError as exc:
            log.error("round %d: submission rejected (%s): %s", rid, exc.code, exc)
            return WorkerResult(rid, False, f"rejected: {exc.code}")
        log.info("round %d: result and proof submitted successfully", rid)
        return WorkerResult(rid, True, to_hex(out))

    def run(self, stop: threading.Event | None = None, interval: float = 0.05):
        stop = stop or threading.Event()
        while not stop.is_set():
            self.poll_once()
            stop.wait(interval)
