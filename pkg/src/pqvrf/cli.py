"""Command-line front end: keygen, run-rounds, verify, randtest."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import threading
import time

from . import chain, ntru, ring, ringsig, rlwe, vrf
from .errors import PqvrfError
from .proof import VrfProof

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "seed": 0,
    "params": "16",
    "participants": 4,
    "rounds": 1,
    "endpoint": None,
    "out": "pqvrf-out",
    "force": False,
    "generate": None,
    "stream_bits": 100_000,
    "min_pass_rate": 0.9,
    "keys": None,
    "corpus": None,
}

GENESIS_TIME = 1_700_000_000
BLOCK_TIME = 12

# file layout under --out
PP_FILE = "public_params.bin"
MSK_FILE = "master_trapdoor.bin"
RLWE_FILE = "offchain_rlwe.bin"
RING_FILE = "ring.json"
KEY_DIR = "participants"


class UsageError(Exception):
    pass


def _load_config(path):
    if path is None:
        return {}
    try:
        import tomllib
    except ModuleNotFoundError:  # python < 3.11
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"bad config file {path}: {exc}")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def resolve(args) -> argparse.Namespace:
    """Defaults < config file < flags."""
    cfg = _load_config(getattr(args, "config", None))
    merged = dict(DEFAULTS)
    merged.update({k.replace("-", "_"): v for k, v in cfg.items()})
    for k, v in vars(args).items():
        if v is not None:
            merged[k] = v
    ns = argparse.Namespace(**merged)
    if int(ns.participants) < 2:
        raise UsageError("--participants must be at least 2")
    if int(ns.rounds) < 1:
        raise UsageError("--rounds must be at least 1")
    if str(ns.params) not in {str(k) for k in ring.SECURITY_PRESETS}:
        raise UsageError(f"--params must be one of {sorted(ring.SECURITY_PRESETS)}")
    return ns


# ---------------------------------------------------------------------------
# key material on disk


def _write(path, data: bytes):
    with open(path, "wb") as fh:
        fh.write(data)


def save_keys(km: vrf.VrfKeyMaterial, out: str):
    os.makedirs(os.path.join(out, KEY_DIR), exist_ok=True)
    _write(os.path.join(out, PP_FILE), km.pp.to_bytes())
    _write(os.path.join(out, MSK_FILE), ntru.trapdoor_to_bytes(km.msk))
    _write(os.path.join(out, RLWE_FILE), rlwe.keypair_to_bytes(km.rlwe))
    params = km.pp.params
    for i, (on, dl) in enumerate(km.participants):
        _write(os.path.join(out, KEY_DIR, f"{i:03d}_onchain.key"), ringsig.userkey_to_bytes(on, params))
        _write(os.path.join(out, KEY_DIR, f"{i:03d}_delegation.key"), ringsig.userkey_to_bytes(dl, params))
    ring_doc = {"ring": km.dids, "delegation_ring": sorted(km.delegation_ring)}
    with open(os.path.join(out, RING_FILE), "w") as fh:
        json.dump(ring_doc, fh, indent=1)


def load_keys(keydir: str) -> vrf.VrfKeyMaterial:
    def read(name):
        with open(os.path.join(keydir, name), "rb") as fh:
            return fh.read()

    pp = ringsig.PublicParams.from_bytes(read(PP_FILE))
    msk = ntru.trapdoor_from_bytes(read(MSK_FILE))
    kp = rlwe.keypair_from_bytes(read(RLWE_FILE))
    with open(os.path.join(keydir, RING_FILE)) as fh:
        count = len(json.load(fh)["ring"])
    parts = []
    for i in range(count):
        on = ringsig.userkey_from_bytes(read(os.path.join(KEY_DIR, f"{i:03d}_onchain.key")), pp.params)
        dl = ringsig.userkey_from_bytes(read(os.path.join(KEY_DIR, f"{i:03d}_delegation.key")), pp.params)
        parts.append((on, dl))
    return vrf.VrfKeyMaterial(pp, msk, kp, parts)


def participant_addr(did: str) -> bytes:
    return ring.keccak256(did.encode())[:20]


# ---------------------------------------------------------------------------
# commands


def cmd_keygen(cfg) -> int:
    out = cfg.out
    if os.path.exists(os.path.join(out, PP_FILE)) and not cfg.force:
        raise UsageError(f"{out} already holds key material; pass --force to overwrite")
    km = vrf.gen(int(cfg.params), int(cfg.participants), ring.make_rng(int(cfg.seed)))
    save_keys(km, out)
    print(f"wrote key material for {len(km.participants)} participants to {out}")
    return EXIT_OK


def run_rounds(km: vrf.VrfKeyMaterial, rounds: int, seed: int, endpoint: str | None = None,
               epoch_length: int = 1):
    """Drive ``rounds`` protocol rounds; returns (chain, per-round records)."""
    rng = ring.make_rng(ring.keccak256(b"driver" + seed.to_bytes(8, "big")))
    sim = chain.ChainSim(km.pp, km.kem_params, GENESIS_TIME, epoch_length)
    server = None
    if endpoint:
        server = chain.ChainServer(sim, endpoint)
        server.start()
        driver = chain.TcpClient(server.endpoint)
        wclient = chain.TcpClient(server.endpoint)
    else:
        driver = wclient = chain.InProcessClient(sim)
    worker = chain.Worker(wclient, km.rlwe, km.pp, seed=b"worker" + seed.to_bytes(8, "big"))
    stop = threading.Event()
    wthread = None
    if server is not None:
        wthread = threading.Thread(target=worker.run, args=(stop, 0.01), daemon=True)
        wthread.start()
    clock = GENESIS_TIME
    records = []
    try:
        for i, (on, dl) in enumerate(km.participants):
            bundle = km.delegate(i, rng)
            driver.submit_delegation(addr=chain.to_hex(participant_addr(on.did)), did=on.did, dkg_did=dl.did,
                                     bundle=chain.to_hex(bundle.to_bytes()))
        for _ in range(2):
            clock += BLOCK_TIME
            driver.advance_block(timestamp=clock)
        sender = chain.to_hex(participant_addr(km.participants[0][0].did))
        for r in range(rounds):
            for on, _ in km.participants:
                share = int(rng.integers(1, 1 << 62))
                commitment = ring.keccak256(rng.bytes(32))
                driver.submit_commitment(round_id=r, addr=chain.to_hex(participant_addr(on.did)), share=share,
                                         commitment=chain.to_hex(commitment))
            seed_hex = driver.compute_onchain_seed(round_id=r, sender=sender)["onchain_seed"]
            if wthread is None:
                worker.poll_once()
            info = _await_round(driver, r)
            records.append({"round_id": r, "phase": info["phase"], "onchain_seed": seed_hex,
                            "proof": info["proof"], "delegate": info["delegate"]})
            clock += BLOCK_TIME
            driver.advance_block(timestamp=clock)
    finally:
        stop.set()
        if wthread is not None:
            wthread.join(timeout=5)
        if server is not None:
            driver.close()
            wclient.close()
            server.shutdown()
            server.server_close()
    return sim, records


def _await_round(client, round_id, timeout=60.0):
    deadline = time.monotonic() + timeout
    while True:
        info = client.get_round(round_id=round_id)
        if info["phase"] != chain.Phase.SEED_READY.value or time.monotonic() > deadline:
            return info
        time.sleep(0.005)


def cmd_run_rounds(cfg) -> int:
    keydir = getattr(cfg, "keys", None) or cfg.out
    if not os.path.exists(os.path.join(keydir, PP_FILE)):
        raise UsageError(f"no key material in {keydir}; run keygen first")
    km = load_keys(keydir)
    sim, records = run_rounds(km, int(cfg.rounds), int(cfg.seed), cfg.endpoint)
    out = cfg.out
    os.makedirs(os.path.join(out, "proofs"), exist_ok=True)
    failures = 0
    summary = []
    params = km.pp.params
    for rec in records:
        ok = rec["phase"] == chain.Phase.FINISHED.value
        entry = {"round_id": rec["round_id"], "phase": rec["phase"], "onchain_seed": rec["onchain_seed"]}
        if ok:
            raw = chain.from_hex(rec["proof"])
            path = os.path.join(out, "proofs", f"round_{rec['round_id']:04d}.proof")
            _write(path, raw)
            entry["vrf_output"] = chain.to_hex(VrfProof.from_bytes(raw, params).vrf_output)
            entry["proof_file"] = os.path.relpath(path, out)
        else:
            failures += 1
        summary.append(entry)
        print(f"round {rec['round_id']}: {rec['phase']} {entry.get('vrf_output', '')}")
    with open(os.path.join(out, "events.json"), "w") as fh:
        json.dump([e.to_json() for e in sim.events], fh, indent=1)
    with open(os.path.join(out, "rounds.json"), "w") as fh:
        json.dump(summary, fh, indent=1)
    sim.save(os.path.join(out, "chain_snapshot.json"))
    if keydir != out:
        with open(os.path.join(keydir, RING_FILE)) as src, open(os.path.join(out, RING_FILE), "w") as dst:
            dst.write(src.read())
        _write(os.path.join(out, PP_FILE), km.pp.to_bytes())
    return EXIT_FAIL if failures else EXIT_OK


def cmd_verify(cfg) -> int:
    for path in (cfg.proof, cfg.ring):
        if not os.path.isfile(path):
            raise UsageError(f"file not found: {path}")
    pp_path = cfg.pp or os.path.join(os.path.dirname(os.path.abspath(cfg.ring)), PP_FILE)
    if not os.path.isfile(pp_path):
        raise UsageError(f"public parameter file not found: {pp_path}")
    with open(pp_path, "rb") as fh:
        pp = ringsig.PublicParams.from_bytes(fh.read())
    with open(cfg.ring) as fh:
        doc = json.load(fh)
    members = doc["delegation_ring"] if isinstance(doc, dict) else list(doc)
    with open(cfg.proof, "rb") as fh:
        raw = fh.read()
    try:
        proof = VrfProof.from_bytes(raw, pp.params)
    except PqvrfError as exc:
        print(f"INVALID: {exc}")
        return EXIT_FAIL
    if vrf.ver(proof, members, pp):
        print(f"VALID vrf_output={chain.to_hex(proof.vrf_output)}")
        return EXIT_OK
    print("INVALID: ring signature does not verify")
    return EXIT_FAIL


def generate_corpus(streams: int, stream_bits: int, seed: int) -> bytes:
    kp = rlwe.rlwe_keygen(ring.RLWE_DEFAULT, ring.make_rng(ring.keccak256(b"corpus" + seed.to_bytes(8, "big"))))
    nbytes = streams * ((stream_bits + 7) // 8)
    return vrf.output_stream(kp, (nbytes + 31) // 32)[:nbytes]


def cmd_randtest(cfg) -> int:
    from .randtest import empirical_entropy, ones_ratio, run_suite
    from .randtest.stats import MIN_ENTROPY_BYTES

    bits_per = int(cfg.stream_bits)
    if bits_per % 8:
        raise UsageError("--stream-bits must be a multiple of 8")
    per_bytes = bits_per // 8
    if cfg.corpus:
        if not os.path.isfile(cfg.corpus):
            raise UsageError(f"corpus not found: {cfg.corpus}")
        with open(cfg.corpus, "rb") as fh:
            data = fh.read()
    elif cfg.generate:
        data = generate_corpus(int(cfg.generate), bits_per, int(cfg.seed))
    else:
        raise UsageError("give a corpus file or --generate N")
    count = len(data) // per_bytes
    if count < 1:
        raise UsageError(f"corpus shorter than one stream of {bits_per} bits")
    streams = [data[i * per_bytes:(i + 1) * per_bytes] for i in range(count)]
    report = run_suite(streams)
    out = cfg.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "rand_report.json"), "w") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out, "rand_report.csv"), "w") as fh:
        fh.write(report.to_csv())
    overall, blocks = ones_ratio(data, 128)
    with open(os.path.join(out, "ones_ratio.csv"), "w") as fh:
        fh.write("block,ratio\n")
        fh.writelines(f"{i},{r:.6f}\n" for i, r in enumerate(blocks))
    # consecutive 32-byte outputs as points in the unit square
    with open(os.path.join(out, "scatter.csv"), "w") as fh:
        fh.write("x,y\n")
        words = [int.from_bytes(data[i:i + 32], "big") / 2**256 for i in range(0, len(data) - 31, 32)]
        fh.writelines(f"{a:.9f},{b:.9f}\n" for a, b in zip(words[0::2], words[1::2]))
    stats = {"ones_ratio": overall, "streams": count, "stream_bits": bits_per}
    if len(data) >= MIN_ENTROPY_BYTES:
        stats["entropy_bits_per_byte"] = empirical_entropy(data)
    with open(os.path.join(out, "stats.json"), "w") as fh:
        json.dump(stats, fh, indent=1)
    for row in report.rows():
        print(f"{row['name']:<45} {row['total']:>4} {row['average_p']:.4f} {row['pass']:>4} {row['fail']:>3} "
              f"{row['pass_pct']:6.2f}")
    print(f"{'Total':<45} {report.total:>4} {report.mean_p:.4f} {report.passed:>4} "
          f"{report.total - report.passed:>3} {100 * report.pass_rate:6.2f}")
    print(f"ones ratio {overall:.4f}")
    return EXIT_OK if report.pass_rate >= float(cfg.min_pass_rate) else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pqvrf", description="Lattice VRF with a simulated MPC seed contract.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="TOML file with default option values")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")

    k = sub.add_parser("keygen", help="generate master, off-chain and participant keys")
    common(k)
    k.add_argument("--params", help="security preset: 16, 32, 64 or 128")
    k.add_argument("--participants", type=int)
    k.add_argument("--force", action="store_true", default=None)
    k.set_defaults(func=cmd_keygen)

    r = sub.add_parser("run-rounds", help="run protocol rounds against the chain simulator")
    common(r)
    r.add_argument("--keys", help="key directory (default: --out)")
    r.add_argument("--rounds", type=int)
    r.add_argument("--endpoint", help="serve the chain over TCP at host:port (port 0 picks one)")
    r.set_defaults(func=cmd_run_rounds)

    v = sub.add_parser("verify", help="check a proof file against a ring file")
    v.add_argument("proof")
    v.add_argument("ring")
    v.add_argument("--pp", help="public parameter file (default: next to the ring file)")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("randtest", help="NIST tests, ones ratio and entropy on VRF output")
    common(t)
    t.add_argument("corpus", nargs="?", help="raw binary corpus")
    t.add_argument("--generate", type=int, metavar="N", help="generate N streams from the VRF")
    t.add_argument("--stream-bits", type=int, dest="stream_bits")
    t.add_argument("--min-pass-rate", type=float, dest="min_pass_rate")
    t.set_defaults(func=cmd_randtest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    func = args.func
    ns = {k: v for k, v in vars(args).items() if k not in ("func", "command", "verbose")}
    try:
        if func is cmd_verify:
            cfg = argparse.Namespace(**ns)
        else:
            cfg = resolve(argparse.Namespace(**ns))
        return func(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PqvrfError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
