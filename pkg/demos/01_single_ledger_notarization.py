"""
Notarizing a single append-only ledger
======================================

A ledger is a sequence of opaque data blocks whose state digest is a
Merkle root. Publishing that digest periodically, together with a
consistency proof against the previous digest, lets anyone verify that
the ledger only ever grew: the old blocks are provably a prefix of the
new ones, and nothing private leaves the producer's hands.
"""

from trienotary import (
    Chain,
    Ledger,
    decode_consistency_proof,
    ledger_root,
    notarize_single,
    prove_inclusion,
    verify_consistency,
    verify_inclusion,
)
from trienotary.crypto import SHA256

# A producer keeps a private ledger of opaque payloads.
ledger = Ledger.from_payloads(b"shipment-421", [b"created", b"packed"], SHA256)
print(f"ledger {ledger.id.decode()}: {len(ledger)} blocks, root {ledger_root(ledger).hex()[:16]}...")

# Day 1: the first notarization publishes the bare digest.
chain = Chain()
first = notarize_single(ledger, None, chain)
print(f"published record {first.seq}: note is empty on the first round")

# Days pass; the ledger grows.
for event in (b"shipped", b"customs", b"delivered"):
    ledger = ledger.append(event)

# Day 2: the new digest goes out with a consistency proof in the note.
second = notarize_single(ledger, (first.trie_root, 2), chain)
print(f"published record {second.seq}: note carries {len(second.note)} bytes of proof")

# An external auditor sees only the chain. The note proves the day-1
# state is a prefix of the day-2 state: history extended, never rewritten.
proof = decode_consistency_proof(second.note, SHA256)
ok = verify_consistency(first.trie_root, second.trie_root, proof, SHA256)
print(f"consistency between the two published digests: {ok}")

# Selective disclosure: the producer reveals just one block, with an
# inclusion proof tying it to the notarized digest.
disclosure = prove_inclusion(ledger, 3)
ok = verify_inclusion(second.trie_root, ledger.blocks[3].block_hash, disclosure, SHA256)
print(f"block 3 ({ledger.blocks[3].payload.decode()!r}) is under the day-2 digest: {ok}")
