"""
Auditing one ledger from public data alone
==========================================

An auditor holds nothing but the published digest sequence and access to
the public storage. From those, for a single ledger id, the audit
establishes that every round associated exactly one value with the id
(no alternative histories), that the id never vanished once notarized
(no removal), and that every digest change extends the previous state
(no forks). Disclosed ledger data can then be matched against the
notarized history.

The second half plays the adversary: the public artifacts are tampered
with in the two classic ways and the audit flags each one.
"""

import random

from trienotary import Ledger, MemoryStore, NotaryState, TrieParams, audit_ledger, notarize_round
from trienotary.chain import Chain, NotarizationRecord
from trienotary.crypto import SHA256
from trienotary.trie import TrieVersion, associations, build

rng = random.Random(3)
params = TrieParams(2, 1, SHA256)
store = MemoryStore(SHA256)
chain = Chain()
state = NotaryState(params)

ledgers = {
    f"passport-{i}".encode(): Ledger.from_payloads(f"passport-{i}".encode(), [rng.randbytes(12)], SHA256)
    for i in range(8)
}
for day in range(4):
    if day:
        for lid in ledgers:
            ledgers[lid] = ledgers[lid].append(rng.randbytes(12))
    state, _ = notarize_round(state, dict(ledgers), store, chain)

target = b"passport-3"
report = audit_ledger(target, ledgers[target], chain.read_roots(), store, params)
print(f"honest history, auditing {target.decode()}:")
for name, check in report.checks().items():
    print(f"  {name}: {check}")
print(f"  verdict: {report.verdict.value}\n")

# --- adversary 1: rewrite a middle chain record ---------------------------
tampered = Chain()
for record in chain.records():
    root = rng.randbytes(32) if record.seq == 1 else record.trie_root
    tampered.publish(NotarizationRecord(record.seq, root, record.note))
report = audit_ledger(target, None, tampered.read_roots(), store, params)
print(f"after rewriting chain record 1: chain_match = {report.chain_match}")

# --- adversary 2: publish a final trie that drops the ledger --------------
assoc = associations(TrieVersion(params, chain.read_roots()[-1], store))
del assoc[SHA256.hash(target)]
malicious = build(params, assoc, chain.read_roots()[-2], store)
tampered = Chain()
for record in chain.records():
    root = malicious.root_digest if record.seq == chain.height - 1 else record.trie_root
    tampered.publish(NotarizationRecord(record.seq, root, record.note))
report = audit_ledger(target, None, tampered.read_roots(), store, params)
print(f"after dropping the key in the final round: no_removal = {report.no_removal}")
print(f"  verdict: {report.verdict.value} (exit code {report.exit_code})")
