"""
Self-contained audit proofs
===========================

Relying on public storage at audit time is a trade-off: the storage must
stay reachable. The alternative is an audit proof, a bundle of exactly
the nodes and consistency proofs the storage-backed audit would have
fetched for one ledger. Verification then needs only the bundle and the
published digest sequence.

The bundle is a static snapshot: records published after it was created
are reported as "not covered" rather than verified, so a verifier always
knows how far the proof actually reaches.
"""

import random

from trienotary import (
    Ledger,
    MemoryStore,
    NotaryState,
    TrieParams,
    decode_audit_proof,
    encode_audit_proof,
    make_audit_proof,
    notarize_round,
    verify_audit_proof,
)
from trienotary.chain import Chain
from trienotary.crypto import SHA256

rng = random.Random(41)
params = TrieParams(2, 1, SHA256)
store = MemoryStore(SHA256)
chain = Chain()
state = NotaryState(params)
ledgers = {
    f"lot-{i}".encode(): Ledger.from_payloads(f"lot-{i}".encode(), [rng.randbytes(10)], SHA256)
    for i in range(50)
}
for day in range(3):
    if day:
        for lid in ledgers:
            if rng.random() < 0.5:
                ledgers[lid] = ledgers[lid].append(rng.randbytes(10))
    state, _ = notarize_round(state, dict(ledgers), store, chain)

# The producer of lot-7 builds a proof covering all three rounds so far.
target = b"lot-7"
proof = make_audit_proof(target, 2, chain.read_roots(), store, params)
blob = encode_audit_proof(proof)
print(f"bundle for {target.decode()}: {len(proof.nodes)} nodes, "
      f"{len(proof.proofs)} consistency proofs, {len(blob)} bytes on the wire")

# A verifier with no storage access replays the audit from the bundle.
report = verify_audit_proof(decode_audit_proof(blob), target, chain.read_roots())
print(f"offline verdict: {report.verdict.value} over {report.covered_rounds} rounds")

# Two more rounds are notarized after the proof was handed out.
for _ in range(2):
    for lid in ledgers:
        ledgers[lid] = ledgers[lid].append(rng.randbytes(10))
    state, _ = notarize_round(state, dict(ledgers), store, chain)

report = verify_audit_proof(decode_audit_proof(blob), target, chain.read_roots())
print(f"after the chain grew to {len(chain.read_roots())} records:")
print(f"  covered rounds: {report.covered_rounds}, not covered: {report.uncovered_rounds}")
print(f"  verdict over the covered prefix: {report.verdict.value}")

# Tampering with any byte of the bundle can only hurt the attacker.
flipped = bytearray(blob)
flipped[60] ^= 0xFF
try:
    report = verify_audit_proof(decode_audit_proof(bytes(flipped)), target, chain.read_roots())
    print(f"one flipped byte: verdict {report.verdict.value}")
except ValueError as exc:
    print(f"one flipped byte: bundle rejected ({exc})")
