"""
How arity and leaf capacity shape the trie
==========================================

The two tuning knobs are r (children per internal node, a power of two)
and k (tuples a leaf may hold). Raising r shortens search paths by a
log factor but widens every internal node; raising k removes internal
nodes and, because hashed keys land unevenly, squeezes the spread
between the shortest and longest search path.

Measurements below come from the vectorized structural engine, which
computes exactly what building the trie and walking it would report,
without hashing a single node. Sizes are shown in the compact accounting
(r-bit bitmaps, log2(k)-bit leaf headers, digest-only payloads).
"""

import time

import numpy as np

from trienotary import TrieParams, measure_keys
from trienotary.crypto import SHA256

n = 1 << 18
keys = np.random.default_rng(2).integers(0, 256, size=(n, 32), dtype=np.uint8)

print(f"{n} random keys; one row per (r, k) configuration\n")
print(f"{'r':>3} {'k':>3} {'nodes':>9} {'min':>4} {'max':>4} {'avg':>7} "
      f"{'total MB':>9} {'avg path B':>11}")
t0 = time.time()
for r in (2, 4, 8):
    for k in (1, 2, 4, 8):
        m = measure_keys(TrieParams(r, k, SHA256), keys)
        print(f"{r:>3} {k:>3} {m.nodes_count:>9} {m.path_len_min:>4} {m.path_len_max:>4} "
              f"{m.path_len_avg:>7.2f} {m.total_size_paper_bits / 8 / 1e6:>9.1f} "
              f"{m.avg_path_size_bytes:>11.0f}")
    print()
print(f"(12 configurations measured in {time.time() - t0:.1f}s)")

# The depth law: average path length tracks log_r(n) plus a constant.
print("depth scaling at r=2, k=1:")
rng = np.random.default_rng(3)
for exp in (14, 16, 18):
    sample = rng.integers(0, 256, size=(1 << exp, 32), dtype=np.uint8)
    m = measure_keys(TrieParams(2, 1, SHA256), sample)
    print(f"  n=2^{exp}: avg path {m.path_len_avg:.2f} = log2(n) + {m.path_len_avg - exp:.2f}")
