"""Authenticated, partially persistent r-ary bitwise trie.

The trie maps fixed-length search keys (hashes of ledger identifiers) to
value digests (ledger state digests). Edges are labeled with log2(r)-bit
chunks of the key, most-significant chunk first; a subtree holding at most
``k`` tuples collapses into a leaf. The shape is therefore a pure function
of (r, k, key set): building the same association set in any order yields
byte-identical nodes.

Nodes are canonically serialized and addressed by their hash, so an
internal node's child references are digests and the root digest
authenticates the entire state, Merkle-style. Versioning is by path
copying: an update re-emits only the nodes on changed paths, the new root
records the previous root's digest, and every old node stays resolvable,
which makes all historical versions readable (partial persistence). Keys
are never deleted.

Wire format (one byte-aligned canonical layout per node)::

    tag 0x01  internal       bitmap[ceil(r/8)]  child digests ascending
    tag 0x02  leaf           count-1 (1 byte)   key||value tuples ascending
    tag 0x03  root-internal  as internal, then prev-root digest
    tag 0x04  root-leaf      as leaf, then prev-root digest

Bitmap bit i (label i) lives at byte i//8, mask 0x80 >> (i % 8). The
all-zero prev-root digest marks the first version of a lineage.
"""

from __future__ import annotations

from dataclasses import dataclass

from .crypto import HashAlg, label_at, label_width
from .errors import (
    CanonicalizationError,
    DeletionNotSupportedError,
    DuplicateKeyError,
    MalformedNodeError,
    MissingNodeError,
    NotFoundError,
)
from .store import ObjectStore

TAG_INTERNAL = 0x01
TAG_LEAF = 0x02
TAG_ROOT_INTERNAL = 0x03
TAG_ROOT_LEAF = 0x04


@dataclass(frozen=True)
class TrieParams:
    """Trie shape parameters, fixed for the lifetime of a lineage."""

    r: int
    k: int
    alg: HashAlg

    def __post_init__(self):
        label_width(self.r)  # validates r
        if not 1 <= self.k <= 256:
            raise ValueError(f"k must be in [1, 256], got {self.k}")

    @property
    def bitmap_len(self) -> int:
        return (self.r + 7) // 8


@dataclass(frozen=True)
class LeafNode:
    """Up to k (key, value) tuples, strictly ascending by key.

    ``prev_root`` is None for non-root leaves; a root leaf carries the
    previous version's root digest (all-zero for the first version).
    """

    entries: tuple[tuple[bytes, bytes], ...]
    prev_root: bytes | None = None

    def value_of(self, key: bytes) -> bytes | None:
        for entry_key, value in self.entries:
            if entry_key == key:
                return value
        return None


@dataclass(frozen=True)
class InternalNode:
    """(label, child digest) pairs, strictly ascending by label."""

    children: tuple[tuple[int, bytes], ...]
    prev_root: bytes | None = None

    def child(self, label: int) -> bytes | None:
        for child_label, digest in self.children:
            if child_label == label:
                return digest
        return None


Node = LeafNode | InternalNode


@dataclass(frozen=True)
class TrieVersion:
    """One notarized trie state: parameters, root digest, and node resolver."""

    params: TrieParams
    root_digest: bytes
    store: ObjectStore


@dataclass(frozen=True)
class Measurements:
    """Size and depth statistics of one trie version.

    ``total_size_bytes`` and ``avg_path_size_bytes`` account nodes in the
    wire format above. ``total_size_paper_bits`` uses the tighter
    accounting typical of size analyses of this structure: r bitmap bits
    per internal node, a ceil(log2(k))-bit tuple-count header plus one
    value digest per tuple for leaves, digest-sized child references, and
    no tags or prev-root field. Path lengths count nodes, root included.
    """

    n_keys: int
    nodes_count: int
    path_len_min: int
    path_len_max: int
    path_len_avg: float
    total_size_bytes: int
    total_size_paper_bits: int
    avg_path_size_bytes: float


# ------------------------------------------------------------ serialization

def serialize_node(node: Node, params: TrieParams) -> bytes:
    """Canonical byte serialization; raises CanonicalizationError on invalid nodes."""
    digest_len = params.alg.output_len
    if node.prev_root is not None and len(node.prev_root) != digest_len:
        raise CanonicalizationError("prev-root digest has wrong length")
    if isinstance(node, LeafNode):
        if not 1 <= len(node.entries) <= params.k:
            raise CanonicalizationError(
                f"leaf holds {len(node.entries)} tuples, allowed 1..{params.k}"
            )
        parts = [
            bytes([TAG_LEAF if node.prev_root is None else TAG_ROOT_LEAF]),
            bytes([len(node.entries) - 1]),
        ]
        prev_key = None
        for key, value in node.entries:
            if len(key) != digest_len or len(value) != digest_len:
                raise CanonicalizationError("tuple key/value has wrong length")
            if prev_key is not None and key <= prev_key:
                raise CanonicalizationError("leaf tuples not strictly ascending")
            prev_key = key
            parts.append(key)
            parts.append(value)
    else:
        if not node.children:
            raise CanonicalizationError("internal node has no children")
        bitmap = bytearray(params.bitmap_len)
        parts = [bytes([TAG_INTERNAL if node.prev_root is None else TAG_ROOT_INTERNAL]), b""]
        prev_label = -1
        for label, digest in node.children:
            if not prev_label < label < params.r:
                raise CanonicalizationError("child labels not strictly ascending in [0, r)")
            if len(digest) != digest_len:
                raise CanonicalizationError("child digest has wrong length")
            prev_label = label
            bitmap[label >> 3] |= 0x80 >> (label & 7)
            parts.append(digest)
        parts[1] = bytes(bitmap)
    if node.prev_root is not None:
        parts.append(node.prev_root)
    return b"".join(parts)


def parse_node(data: bytes, params: TrieParams) -> Node:
    """Inverse of serialize_node; raises MalformedNodeError on any deviation."""
    digest_len = params.alg.output_len
    if not data:
        raise MalformedNodeError("empty node")
    tag = data[0]
    is_root = tag in (TAG_ROOT_INTERNAL, TAG_ROOT_LEAF)
    body_end = len(data) - digest_len if is_root else len(data)
    prev_root = data[body_end:] or None
    if is_root and body_end <= 0:
        raise MalformedNodeError("root node shorter than its prev-root field")
    if tag in (TAG_LEAF, TAG_ROOT_LEAF):
        if body_end < 2:
            raise MalformedNodeError("leaf too short")
        count = data[1] + 1
        if count > params.k:
            raise MalformedNodeError(f"leaf holds {count} tuples, limit {params.k}")
        if body_end != 2 + count * 2 * digest_len:
            raise MalformedNodeError("leaf length does not match its tuple count")
        entries = []
        prev_key = None
        for i in range(count):
            offset = 2 + i * 2 * digest_len
            key = data[offset:offset + digest_len]
            value = data[offset + digest_len:offset + 2 * digest_len]
            if prev_key is not None and key <= prev_key:
                raise MalformedNodeError("leaf tuples not strictly ascending")
            prev_key = key
            entries.append((key, value))
        return LeafNode(tuple(entries), prev_root)
    if tag in (TAG_INTERNAL, TAG_ROOT_INTERNAL):
        bitmap_end = 1 + params.bitmap_len
        if body_end < bitmap_end:
            raise MalformedNodeError("internal node shorter than its bitmap")
        bitmap = data[1:bitmap_end]
        labels = [
            (byte_index << 3) | bit
            for byte_index, byte in enumerate(bitmap)
            for bit in range(8)
            if byte & (0x80 >> bit)
        ]
        if not labels:
            raise MalformedNodeError("internal node has no children")
        if labels[-1] >= params.r:
            raise MalformedNodeError("bitmap marks a label outside [0, r)")
        if body_end != bitmap_end + len(labels) * digest_len:
            raise MalformedNodeError("internal length does not match its bitmap")
        children = tuple(
            (label, data[bitmap_end + i * digest_len:bitmap_end + (i + 1) * digest_len])
            for i, label in enumerate(labels)
        )
        return InternalNode(children, prev_root)
    raise MalformedNodeError(f"unknown node tag 0x{tag:02x}")


def node_digest(node: Node, params: TrieParams) -> bytes:
    return params.alg.hash(serialize_node(node, params))


# ------------------------------------------------------------- construction

def _sorted_pairs(
    assoc, params: TrieParams, none_is_deletion: bool = False
) -> list[tuple[bytes, bytes]]:
    items = list(assoc.items()) if hasattr(assoc, "items") else list(assoc)
    digest_len = params.alg.output_len
    seen: set[bytes] = set()
    for key, value in items:
        if value is None:
            if none_is_deletion:
                raise DeletionNotSupportedError(
                    f"key {key.hex()} maps to None; keys cannot be removed"
                )
            raise ValueError("association value is None")
        if len(key) != digest_len or len(value) != digest_len:
            raise ValueError("keys and values must be digests of the configured length")
        if key in seen:
            raise DuplicateKeyError(f"duplicate search key {key.hex()}")
        seen.add(key)
    items.sort(key=lambda pair: pair[0])
    return items


class _Builder:
    def __init__(self, params: TrieParams, store: ObjectStore):
        self.params = params
        self.store = store

    def emit(self, node: Node) -> bytes:
        return self.store.put(serialize_node(node, self.params))

    def build_range(
        self,
        pairs: list[tuple[bytes, bytes]],
        lo: int,
        hi: int,
        depth: int,
        prev_root: bytes | None,
    ) -> bytes:
        """Emit the subtree over sorted pairs[lo:hi]; returns its digest."""
        params = self.params
        if hi - lo <= params.k:
            return self.emit(LeafNode(tuple(pairs[lo:hi]), prev_root))
        children = []
        i = lo
        while i < hi:
            label = label_at(pairs[i][0], depth, params.r)
            j = i + 1
            while j < hi and label_at(pairs[j][0], depth, params.r) == label:
                j += 1
            children.append((label, self.build_range(pairs, i, j, depth + 1, None)))
            i = j
        return self.emit(InternalNode(tuple(children), prev_root))

    def resolve(self, digest: bytes) -> Node:
        try:
            data = self.store.get(digest)
        except NotFoundError:
            raise MissingNodeError(f"node {digest.hex()} not resolvable") from None
        return parse_node(data, self.params)

    def update_node(
        self,
        digest: bytes,
        changes: list[tuple[bytes, bytes]],
        lo: int,
        hi: int,
        depth: int,
        prev_root: bytes | None,
    ) -> bytes:
        """Re-emit the subtree at ``digest`` with changes[lo:hi] applied."""
        node = self.resolve(digest)
        if isinstance(node, LeafNode):
            merged = dict(node.entries)
            merged.update(changes[lo:hi])
            pairs = sorted(merged.items())
            return self.build_range(pairs, 0, len(pairs), depth, prev_root)
        params = self.params
        patched = dict(node.children)
        i = lo
        while i < hi:
            label = label_at(changes[i][0], depth, params.r)
            j = i + 1
            while j < hi and label_at(changes[j][0], depth, params.r) == label:
                j += 1
            existing = node.child(label)
            if existing is None:
                patched[label] = self.build_range(changes, i, j, depth + 1, None)
            else:
                patched[label] = self.update_node(existing, changes, i, j, depth + 1, None)
            i = j
        return self.emit(InternalNode(tuple(sorted(patched.items())), prev_root))


def build(params: TrieParams, assoc, prev_root: bytes | None, store: ObjectStore) -> TrieVersion:
    """Construct a trie version over the full association set.

    ``assoc`` is a mapping or iterable of (search key, value digest) pairs;
    the resulting structure does not depend on its iteration order. All
    nodes are emitted to ``store``; ``prev_root`` (the all-zero sentinel
    for a first version) is embedded in the root node.
    """
    pairs = _sorted_pairs(assoc, params)
    if not pairs:
        raise ValueError("cannot build a trie over an empty association set")
    if prev_root is None:
        prev_root = params.alg.zero
    builder = _Builder(params, store)
    root = builder.build_range(pairs, 0, len(pairs), 0, prev_root)
    return TrieVersion(params, root, store)


def update(prev: TrieVersion, changes) -> TrieVersion:
    """New version with ``changes`` (inserts and value updates) applied.

    Equivalent, node for node, to rebuilding the merged association set
    from scratch with the previous root digest chained in, but only the
    paths touched by ``changes`` are re-emitted; every other node is shared
    with ``prev``, whose own nodes all remain resolvable.

    Mapping a key to None is an attempted deletion and is rejected.
    """
    pairs = _sorted_pairs(changes, prev.params, none_is_deletion=True)
    if not pairs:
        raise ValueError("update requires at least one change")
    builder = _Builder(prev.params, prev.store)
    root = builder.update_node(prev.root_digest, pairs, 0, len(pairs), 0, prev.root_digest)
    return TrieVersion(prev.params, root, prev.store)


def rechain(prev: TrieVersion) -> TrieVersion:
    """New version with identical content whose root chains to ``prev``.

    Covers notarization rounds in which no ledger digest changed: only the
    root node is re-emitted, with its prev-root field moved forward.
    """
    builder = _Builder(prev.params, prev.store)
    node = builder.resolve(prev.root_digest)
    if isinstance(node, LeafNode):
        root = builder.emit(LeafNode(node.entries, prev.root_digest))
    else:
        root = builder.emit(InternalNode(node.children, prev.root_digest))
    return TrieVersion(prev.params, root, prev.store)


# ------------------------------------------------------------------ queries

def lookup(version: TrieVersion, key: bytes) -> bytes | None:
    """Value digest associated with ``key`` in this version, or None."""
    builder = _Builder(version.params, version.store)
    digest = version.root_digest
    depth = 0
    while True:
        node = builder.resolve(digest)
        if isinstance(node, LeafNode):
            return node.value_of(key)
        child = node.child(label_at(key, depth, version.params.r))
        if child is None:
            return None
        digest = child
        depth += 1


def search_path(version: TrieVersion, key: bytes) -> list[tuple[bytes, int | None]]:
    """Node serializations from the root to the node deciding ``key``.

    Each element pairs a node's canonical bytes with the label taken out of
    it; the terminal element (a leaf, or the internal node whose bitmap
    proves absence) carries None. Hashing element i+1 reproduces the child
    digest stored in element i at the taken label.
    """
    params = version.params
    path: list[tuple[bytes, int | None]] = []
    digest = version.root_digest
    depth = 0
    while True:
        try:
            data = version.store.get(digest)
        except NotFoundError:
            raise MissingNodeError(f"node {digest.hex()} not resolvable") from None
        node = parse_node(data, params)
        if isinstance(node, LeafNode):
            path.append((data, None))
            return path
        label = label_at(key, depth, params.r)
        child = node.child(label)
        if child is None:
            path.append((data, None))
            return path
        path.append((data, label))
        digest = child
        depth += 1


def associations(version: TrieVersion) -> dict[bytes, bytes]:
    """The full (key, value) set of one version, by walking every leaf."""
    builder = _Builder(version.params, version.store)
    out: dict[bytes, bytes] = {}
    stack = [version.root_digest]
    while stack:
        node = builder.resolve(stack.pop())
        if isinstance(node, LeafNode):
            out.update(node.entries)
        else:
            stack.extend(digest for _, digest in node.children)
    return out


def _paper_leaf_header_bits(k: int) -> int:
    return (k - 1).bit_length()


def stats(version: TrieVersion) -> Measurements:
    """Walk every reachable node once and measure the version's shape."""
    params = version.params
    builder = _Builder(params, version.store)
    digest_bits = 8 * params.alg.output_len
    header_bits = _paper_leaf_header_bits(params.k)

    nodes = 0
    total_bytes = 0
    paper_bits = 0
    n_keys = 0
    depth_min = None
    depth_max = 0
    depth_sum = 0
    path_bytes_sum = 0

    stack: list[tuple[bytes, int, int]] = [(version.root_digest, 0, 0)]
    while stack:
        digest, depth, prefix_bytes = stack.pop()
        try:
            data = version.store.get(digest)
        except NotFoundError:
            raise MissingNodeError(f"node {digest.hex()} not resolvable") from None
        node = parse_node(data, params)
        nodes += 1
        total_bytes += len(data)
        if isinstance(node, LeafNode):
            count = len(node.entries)
            paper_bits += header_bits + count * digest_bits
            n_keys += count
            path_len = depth + 1
            depth_min = path_len if depth_min is None else min(depth_min, path_len)
            depth_max = max(depth_max, path_len)
            depth_sum += count * path_len
            path_bytes_sum += count * (prefix_bytes + len(data))
        else:
            paper_bits += params.r + len(node.children) * digest_bits
            for _, child in node.children:
                stack.append((child, depth + 1, prefix_bytes + len(data)))

    return Measurements(
        n_keys=n_keys,
        nodes_count=nodes,
        path_len_min=depth_min or 0,
        path_len_max=depth_max,
        path_len_avg=depth_sum / n_keys,
        total_size_bytes=total_bytes,
        total_size_paper_bits=paper_bits,
        avg_path_size_bytes=path_bytes_sum / n_keys,
    )
