"""Command-line driver: simulation, notarization artifacts, audits, benchmarks.

A working directory holds one deployment's public artifacts:

    chain.log     append-only journal of notarization records
    objects/      content-addressed storage (trie nodes, proofs)
    proofs.idx    (ledger key, round) -> proof address index
    ledgers/      ledger exports (the data a producer would disclose)
    config.json   hash algorithm and trie parameters

``audit`` and ``verify`` exit 0 when every check passes, 1 when a check
proves a violation, and 2 when storage gaps leave the audit inconclusive.
``tamper`` is a test hook simulating an attacker who edits the public
artifacts after the fact.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .audit import (
    AuditReport,
    audit_ledger,
    decode_audit_proof,
    encode_audit_proof,
    make_audit_proof,
    verify_audit_proof,
)
from .chain import Chain, NotarizationRecord, format_record
from .crypto import HashAlg, algorithm
from .errors import CannotConstructError, TrienotaryError
from .merkle import ConsistencyProof, Ledger, encode_consistency_proof, read_ledger, write_ledger
from .notary import NotaryState, notarize_round
from .store import DirectoryStore, ObjectStore
from .structure import keys_to_array, measure_keys
from .trie import TrieParams, TrieVersion, associations, build, search_path

CSV_HEADER = "r,k,ledgers,nodes,path_min,path_max,path_avg,total_bytes,total_paper_bits,path_avg_bytes"

CONFIG_NAME = "config.json"
CHAIN_NAME = "chain.log"
LEDGER_DIR_NAME = "ledgers"


# ----------------------------------------------------------------- workdir

def _write_config(workdir: Path, params: TrieParams) -> None:
    config = {"hash": params.alg.name, "r": params.r, "k": params.k}
    (workdir / CONFIG_NAME).write_text(json.dumps(config, sort_keys=True) + "\n")


def _load_params(workdir: Path, args) -> TrieParams:
    config = {}
    config_path = workdir / CONFIG_NAME
    if config_path.exists():
        config = json.loads(config_path.read_text())
    alg = algorithm(args.hash or config.get("hash", "sha256"))
    r = args.r or config.get("r", 2)
    k = args.k or config.get("k", 1)
    return TrieParams(r, k, alg)


def _ledger_path(workdir: Path, ledger_id: bytes) -> Path:
    return workdir / LEDGER_DIR_NAME / f"{ledger_id.hex()}.ledger"


def _open_workdir(args) -> tuple[Path, TrieParams, DirectoryStore, Chain]:
    workdir = Path(args.workdir)
    if not (workdir / CHAIN_NAME).exists():
        raise FileNotFoundError(f"no {CHAIN_NAME} under {workdir}")
    params = _load_params(workdir, args)
    store = DirectoryStore(workdir, params.alg)
    chain = Chain(workdir / CHAIN_NAME)
    return workdir, params, store, chain


# ---------------------------------------------------------------- simulate

def run_simulation(
    n_ledgers: int,
    rounds: int,
    append_rate: float,
    seed: int,
    params: TrieParams,
    store: ObjectStore,
    chain: Chain,
) -> tuple[NotaryState, dict[bytes, Ledger]]:
    """Seeded end-to-end run: create ledgers, append between rounds, notarize.

    ``append_rate`` is blocks appended per ledger per round: the integer
    part always, the fractional part as a seeded coin flip, so rate 0
    appends nothing and rate 1 appends exactly one block.
    """
    rng = random.Random(seed)
    alg = params.alg
    ledgers = {
        f"ledger-{i}".encode(): Ledger.from_payloads(
            f"ledger-{i}".encode(), [rng.randbytes(32)], alg
        )
        for i in range(n_ledgers)
    }
    state = NotaryState(params)
    whole, fraction = int(append_rate), append_rate - int(append_rate)
    for round_seq in range(rounds):
        if round_seq > 0:
            for lid in ledgers:
                count = whole + (1 if fraction and rng.random() < fraction else 0)
                for _ in range(count):
                    ledgers[lid] = ledgers[lid].append(rng.randbytes(32))
        state, _ = notarize_round(state, dict(ledgers), store, chain)
    return state, ledgers


def _cmd_simulate(args) -> int:
    workdir = Path(args.workdir)
    if (workdir / CHAIN_NAME).exists():
        if not args.force:
            print(f"error: {workdir} already holds a simulation (use --force)", file=sys.stderr)
            return 1
        import shutil

        for name in (CHAIN_NAME, "proofs.idx", CONFIG_NAME):
            (workdir / name).unlink(missing_ok=True)
        for name in ("objects", LEDGER_DIR_NAME):
            shutil.rmtree(workdir / name, ignore_errors=True)
    workdir.mkdir(parents=True, exist_ok=True)
    params = TrieParams(args.r or 2, args.k or 1, algorithm(args.hash or "sha256"))
    _write_config(workdir, params)
    store = DirectoryStore(workdir, params.alg)
    chain = Chain(workdir / CHAIN_NAME)
    _, ledgers = run_simulation(
        args.ledgers, args.rounds, args.append_rate, args.seed, params, store, chain
    )
    (workdir / LEDGER_DIR_NAME).mkdir(exist_ok=True)
    for lid, ledger in ledgers.items():
        write_ledger(ledger, _ledger_path(workdir, lid), args.enc)
    print(
        f"simulated {args.ledgers} ledgers over {args.rounds} rounds "
        f"(r={params.r}, k={params.k}, {params.alg.name}) in {workdir}"
    )
    return 0


# ------------------------------------------------------------------- bench

def run_bench(r_values, k_values, n_values, seed: int, alg: HashAlg, out) -> None:
    """Parameter sweep: one CSV row of trie measurements per (r, k, n) cell."""
    print(CSV_HEADER, file=out)
    key_cache: dict[int, object] = {}
    for n in n_values:
        rng = random.Random(seed)
        ids = [f"ledger-{i}" for i in range(n)]
        rng.shuffle(ids)
        key_cache[n] = keys_to_array(
            [alg.hash(ledger_id.encode()) for ledger_id in ids], alg.output_len
        )
    for r in r_values:
        for k in k_values:
            for n in n_values:
                m = measure_keys(TrieParams(r, k, alg), key_cache[n])
                print(
                    f"{r},{k},{n},{m.nodes_count},{m.path_len_min},{m.path_len_max},"
                    f"{m.path_len_avg:.4f},{m.total_size_bytes},{m.total_size_paper_bits},"
                    f"{m.avg_path_size_bytes:.2f}",
                    file=out,
                )


def _cmd_bench(args) -> int:
    alg = algorithm(args.hash or "sha256")
    r_values = [int(x) for x in args.r_list.split(",")]
    k_values = [int(x) for x in args.k_list.split(",")]
    n_values = [int(x) for x in args.ledgers.split(",")]
    if args.out == "-":
        run_bench(r_values, k_values, n_values, args.seed, alg, sys.stdout)
    else:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            run_bench(r_values, k_values, n_values, args.seed, alg, fh)
    return 0


# ------------------------------------------------------------ audit family

def _print_report(report: AuditReport) -> None:
    for name, check in report.checks().items():
        print(f"{name}: {check}")
    if report.uncovered_rounds:
        first, last = report.uncovered_rounds[0], report.uncovered_rounds[-1]
        print(f"not covered: rounds {first}..{last} (published after proof creation)")
    print(f"verdict: {report.verdict.value}")


def _cmd_audit(args) -> int:
    workdir, params, store, chain = _open_workdir(args)
    ledger_id = args.id.encode()
    ledger_file = _ledger_path(workdir, ledger_id)
    if not ledger_file.exists():
        print(f"inconclusive: no disclosed data for ledger id {args.id!r}", file=sys.stderr)
        return 2
    claimed = read_ledger(ledger_file)
    report = audit_ledger(ledger_id, claimed, chain.read_roots(), store, params)
    _print_report(report)
    return report.exit_code


def _cmd_prove(args) -> int:
    workdir, params, store, chain = _open_workdir(args)
    ledger_id = args.id.encode()
    up_to = chain.height - 1 if args.round is None else args.round
    try:
        proof = make_audit_proof(ledger_id, up_to, chain.read_roots(), store, params)
    except (CannotConstructError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    blob = encode_audit_proof(proof)
    Path(args.out).write_bytes(blob)
    print(f"wrote audit proof for rounds 0..{up_to} ({len(blob)} bytes) to {args.out}")
    return 0


def _cmd_verify(args) -> int:
    try:
        proof = decode_audit_proof(Path(args.proof).read_bytes())
    except (OSError, ValueError) as exc:
        print(f"inconclusive: unreadable audit proof ({exc})", file=sys.stderr)
        return 2
    chain = Chain(Path(args.workdir) / CHAIN_NAME)
    report = verify_audit_proof(proof, args.id.encode(), chain.read_roots())
    _print_report(report)
    return report.exit_code


def _cmd_print_chain(args) -> int:
    chain = Chain(Path(args.workdir) / CHAIN_NAME)
    for record in chain.records():
        print(format_record(record))
    return 0


# ------------------------------------------------------------------ tamper

def _rewrite_chain(workdir: Path, records: list[NotarizationRecord]) -> None:
    lines = [format_record(record) for record in records]
    (workdir / CHAIN_NAME).write_text("\n".join(lines) + "\n", encoding="ascii")


def _flip_stored_byte(store: DirectoryStore, address: bytes) -> None:
    path = store._path_for(address)
    raw = bytearray(path.read_bytes())
    raw[0] ^= 0xFF
    path.write_bytes(bytes(raw))


def _cmd_tamper(args) -> int:
    workdir, params, store, chain = _open_workdir(args)
    rng = random.Random(args.seed)
    records = chain.records()
    roots = chain.read_roots()
    last = chain.height - 1
    key = params.alg.hash(args.id.encode()) if args.id else None
    version = TrieVersion(params, roots[last], store)

    if args.kind in ("remove-key", "fork-value"):
        if key is None:
            print("error: --id is required for this tamper kind", file=sys.stderr)
            return 1
        assoc = associations(version)
        if key not in assoc:
            print("error: ledger id is not in the latest trie", file=sys.stderr)
            return 1
        if args.kind == "remove-key":
            if len(assoc) == 1:
                print("error: cannot drop the only key in the trie", file=sys.stderr)
                return 1
            del assoc[key]
        else:
            forged = rng.randbytes(params.alg.output_len)
            assoc[key] = forged
            if store.find_proof(key, last) is None:
                bogus = encode_consistency_proof(ConsistencyProof(1, 2, (forged,)))
                store.index_proof(key, last, store.put(bogus))
        prev_root = roots[last - 1] if last > 0 else params.alg.zero
        malicious = build(params, assoc, prev_root, store)
        records[last] = NotarizationRecord(last, malicious.root_digest, records[last].note)
        _rewrite_chain(workdir, records)
    elif args.kind == "chain-mismatch":
        target = rng.randrange(max(last, 1))
        records[target] = NotarizationRecord(
            target, rng.randbytes(params.alg.output_len), records[target].note
        )
        _rewrite_chain(workdir, records)
    elif args.kind == "corrupt-node":
        if key is None:
            print("error: --id is required for this tamper kind", file=sys.stderr)
            return 1
        path = search_path(version, key)
        _flip_stored_byte(store, params.alg.hash(path[-1][0]))
    elif args.kind == "corrupt-proof":
        if key is None:
            print("error: --id is required for this tamper kind", file=sys.stderr)
            return 1
        for round_seq in range(1, chain.height):
            address = store.find_proof(key, round_seq)
            if address is not None:
                _flip_stored_byte(store, address)
                break
        else:
            print("error: no stored proof for this ledger", file=sys.stderr)
            return 1
    print(f"injected fault: {args.kind}")
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trienotary",
        description="Notarize many append-only ledgers under one chained trie digest.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_workdir(p):
        p.add_argument(
            "--workdir",
            default=os.environ.get("NOTARY_WORKDIR"),
            required=os.environ.get("NOTARY_WORKDIR") is None,
            help="deployment directory (default: $NOTARY_WORKDIR)",
        )

    def add_params(p):
        p.add_argument("--hash", choices=["sha256", "sha512"], default=None)
        p.add_argument("--r", type=int, default=None, help="trie arity (power of two)")
        p.add_argument("--k", type=int, default=None, help="max tuples per leaf")

    p = sub.add_parser("simulate", help="seeded end-to-end notarization run")
    add_workdir(p)
    add_params(p)
    p.add_argument("--ledgers", type=int, default=10)
    p.add_argument("--rounds", type=int, default=3)
    p.add_argument("--append-rate", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--enc", choices=["hex", "base64"], default="hex")
    p.add_argument("--force", action="store_true", help="overwrite an existing run")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bench", help="trie size/depth sweep, CSV output")
    p.add_argument("--r", dest="r_list", default="2,4,8", help="comma-separated arities")
    p.add_argument("--k", dest="k_list", default="1,2,4,8", help="comma-separated leaf capacities")
    p.add_argument("--ledgers", default="100000", help="comma-separated ledger counts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hash", choices=["sha256", "sha512"], default=None)
    p.add_argument("--out", default="-", help="CSV path, - for stdout")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("audit", help="audit one ledger against chain + storage")
    p.add_argument("id", help="ledger id")
    add_workdir(p)
    add_params(p)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("prove", help="write a self-contained audit proof")
    p.add_argument("id")
    add_workdir(p)
    add_params(p)
    p.add_argument("--out", required=True)
    p.add_argument("--round", type=int, default=None, help="last covered round (default: latest)")
    p.set_defaults(func=_cmd_prove)

    p = sub.add_parser("verify", help="verify an audit proof offline")
    p.add_argument("id")
    p.add_argument("--proof", required=True)
    add_workdir(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("tamper", help="test hook: corrupt public artifacts")
    add_workdir(p)
    add_params(p)
    p.add_argument(
        "--kind",
        required=True,
        choices=["remove-key", "fork-value", "chain-mismatch", "corrupt-node", "corrupt-proof"],
    )
    p.add_argument("--id", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_tamper)

    p = sub.add_parser("print-chain", help="print the notarization journal")
    add_workdir(p)
    p.set_defaults(func=_cmd_print_chain)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TrienotaryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
