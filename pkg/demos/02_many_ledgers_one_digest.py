"""
Aggregating thousands of ledgers under one published digest
===========================================================

Notarizing each ledger separately costs one public-chain write per ledger
per round. The trie collapses that to one write per round, whatever the
ledger count: every ledger's digest is a value in an authenticated bitwise
trie keyed by the hash of its id, and only the trie's root digest is
published. Each root also embeds the previous root's digest, so the
version history itself is authenticated.
"""

import random

from trienotary import (
    Chain,
    Ledger,
    MemoryStore,
    NotaryState,
    TrieParams,
    TrieVersion,
    ledger_root,
    lookup,
    notarize_round,
    parse_node,
)
from trienotary.crypto import SHA256

rng = random.Random(7)
params = TrieParams(r=4, k=2, alg=SHA256)
store = MemoryStore(SHA256)
chain = Chain()
state = NotaryState(params)

ledgers = {
    f"device-{i}".encode(): Ledger.from_payloads(f"device-{i}".encode(), [rng.randbytes(16)], SHA256)
    for i in range(2000)
}

# Three daily rounds; between rounds, some ledgers append blocks.
for day in range(3):
    if day:
        for lid in ledgers:
            if lid == b"device-1234" or rng.random() < 0.3:
                ledgers[lid] = ledgers[lid].append(rng.randbytes(16))
    state, record = notarize_round(state, dict(ledgers), store, chain)
    print(f"round {record.seq}: {len(ledgers)} ledgers, ONE chain record "
          f"(root {record.trie_root.hex()[:16]}...)")

print(f"\nchain height after 3 rounds: {chain.height} records (not {3 * len(ledgers)})")
print(f"store holds {len(store)} content-addressed objects (nodes + proofs)")

# Any ledger's digest is readable from any historical version.
roots = chain.read_roots()
target = b"device-1234"
for day, root in enumerate(roots):
    version = TrieVersion(params, root, store)
    value = lookup(version, SHA256.hash(target))
    print(f"round {day}: {target.decode()} -> {value.hex()[:16]}...")
print(f"latest digest matches the live ledger: "
      f"{lookup(TrieVersion(params, roots[-1], store), SHA256.hash(target)) == ledger_root(ledgers[target])}")

# Root chaining: each published root names its predecessor.
last = parse_node(store.get(roots[-1]), params)
print(f"round 2's root embeds round 1's digest: {last.prev_root == roots[-2]}")
