"""Vectorized shape measurements of the trie induced by a key set.

The trie's structure is a pure function of (r, k, key set): once keys are
sorted, every subtree covers a contiguous slice, and the nodes at depth d
are exactly the maximal runs of equal (d+1)-label prefixes nested inside
internal nodes of depth d-1. That makes the full set of measurements that
``trie.stats`` extracts from a stored version computable level by level
with numpy run-length operations, without hashing or materializing a
single node, which is what makes multi-million-key parameter sweeps
practical.

``measure_keys`` returns the same ``Measurements`` that building the trie
and calling ``trie.stats`` on it would produce (the equivalence is pinned
by tests).
"""

from __future__ import annotations

import numpy as np

from .errors import DuplicateKeyError, KeyExhaustedError
from .trie import Measurements, TrieParams, _paper_leaf_header_bits


def keys_to_array(keys, key_len: int) -> np.ndarray:
    """Pack an iterable of equal-length byte keys into an (n, key_len) uint8 array."""
    if isinstance(keys, np.ndarray):
        if keys.ndim != 2 or keys.shape[1] != key_len or keys.dtype != np.uint8:
            raise ValueError(f"expected a (n, {key_len}) uint8 array, got {keys.shape} {keys.dtype}")
        return keys
    joined = b"".join(keys)
    if len(joined) % key_len:
        raise ValueError("keys are not all of the configured digest length")
    return np.frombuffer(joined, dtype=np.uint8).reshape(-1, key_len)


def _lex_sorted_columns(arr: np.ndarray) -> np.ndarray:
    """Keys as lexicographically sorted big-endian uint64 columns."""
    cols = arr.view(">u8").astype(np.uint64)
    order = np.lexsort(tuple(cols[:, j] for j in range(cols.shape[1] - 1, -1, -1)))
    return cols[order]


def measure_keys(params: TrieParams, keys) -> Measurements:
    """Measurements of the trie that ``trie.build`` would produce over ``keys``."""
    key_len = params.alg.output_len
    arr = keys_to_array(keys, key_len)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("cannot measure an empty key set")
    cols = _lex_sorted_columns(arr)
    ncols = cols.shape[1]

    # neq[i] = keys i and i+1 differ within the column; built lazily as
    # levels consume columns, with finished columns folded into an
    # accumulated mask.
    acc_full = np.zeros(n - 1, dtype=bool)
    folded_cols = 0

    def changed_after(t_bits: int) -> np.ndarray:
        """Mask over adjacent pairs: first t_bits of the keys differ."""
        nonlocal acc_full, folded_cols
        full, rem = divmod(t_bits, 64)
        while folded_cols < full:
            acc_full |= cols[1:, folded_cols] != cols[:-1, folded_cols]
            folded_cols += 1
        if rem == 0:
            return acc_full
        shifted = cols[:, full] >> np.uint64(64 - rem)
        return acc_full | (shifted[1:] != shifted[:-1])

    if not bool(changed_after(8 * key_len).all()):
        raise DuplicateKeyError("duplicate search key in measured set")
    # reset lazy state consumed by the duplicate check
    acc_full = np.zeros(n - 1, dtype=bool)
    folded_cols = 0

    w = params.r.bit_length() - 1
    digest_len = key_len
    digest_bits = 8 * key_len
    bitmap_len = params.bitmap_len
    header_bits = _paper_leaf_header_bits(params.k)
    max_levels = (8 * key_len) // w

    nodes_count = 0
    total_bytes = 0
    paper_bits = 0
    depth_min: int | None = None
    depth_max = 0
    depth_sum = 0
    path_bytes_sum = 0

    # per-level run state: start index, node flag, and accumulated byte size
    # of the ancestors of each node run
    starts = np.zeros(1, dtype=np.int64)
    is_node = np.ones(1, dtype=bool)
    prefix_bytes = np.zeros(1, dtype=np.int64)
    depth = 0

    while True:
        sizes = np.diff(starts, append=n)
        leaf_runs = is_node & (sizes <= params.k)
        internal_runs = is_node & (sizes > params.k)
        root_extra = digest_len if depth == 0 else 0

        if leaf_runs.any():
            leaf_sizes = sizes[leaf_runs]
            leaf_keys = int(leaf_sizes.sum())
            count = int(leaf_runs.sum())
            nodes_count += count
            total_bytes += count * (2 + root_extra) + 2 * digest_len * leaf_keys
            paper_bits += count * header_bits + digest_bits * leaf_keys
            path_len = depth + 1
            depth_min = path_len if depth_min is None else min(depth_min, path_len)
            depth_max = max(depth_max, path_len)
            depth_sum += path_len * leaf_keys
            leaf_node_bytes = 2 + root_extra + 2 * digest_len * leaf_sizes
            path_bytes_sum += int(
                (leaf_sizes * (prefix_bytes[leaf_runs] + leaf_node_bytes)).sum()
            )

        if not internal_runs.any():
            break
        if depth >= max_levels:
            raise KeyExhaustedError(
                f"keys not separable within {max_levels} labels of {w} bits"
            )

        child_changed = changed_after((depth + 1) * w)
        child_starts = np.flatnonzero(np.concatenate(([True], child_changed)))
        parents = np.searchsorted(starts, child_starts, side="right") - 1
        child_counts = np.bincount(parents, minlength=len(starts))

        popcounts = child_counts[internal_runs]
        count = int(internal_runs.sum())
        nodes_count += count
        internal_node_bytes = 1 + bitmap_len + root_extra + digest_len * popcounts
        total_bytes += int(internal_node_bytes.sum())
        paper_bits += count * params.r + digest_bits * int(popcounts.sum())

        # children of internal runs become next level's node runs
        child_is_node = internal_runs[parents]
        internal_prefix = np.zeros(len(starts), dtype=np.int64)
        internal_prefix[internal_runs] = prefix_bytes[internal_runs] + internal_node_bytes
        child_prefix = internal_prefix[parents]

        starts = child_starts
        is_node = child_is_node
        prefix_bytes = child_prefix
        depth += 1

    return Measurements(
        n_keys=n,
        nodes_count=nodes_count,
        path_len_min=depth_min or 0,
        path_len_max=depth_max,
        path_len_avg=depth_sum / n,
        total_size_bytes=total_bytes,
        total_size_paper_bits=paper_bits,
        avg_path_size_bytes=path_bytes_sum / n,
    )
