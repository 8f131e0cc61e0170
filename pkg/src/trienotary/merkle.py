"""Append-only ledgers with Merkle roots, consistency proofs, and inclusion proofs.

A ledger is an ordered sequence of opaque data blocks. Its state digest is
the head of a Merkle tree whose leaves are the block hashes, built with the
classic transparency-log construction: the split point of an n-leaf tree is
the largest power of two smaller than n, leaf and interior hashes are
domain-separated with a one-byte prefix, and the empty tree hashes the
empty string.

Two proof kinds are supported:

* consistency proofs: the leaves of an older tree are a prefix, in order,
  of a newer tree's leaves (history was extended, never rewritten);
* inclusion proofs: a specific block is present at a specific position
  under a given root (selective disclosure of single blocks).

Proof generation follows the recursive subproof/path definitions; proof
verification is the independent iterative reconstruction, so a round-trip
exercises two different formulations of the same tree.
"""

from __future__ import annotations

from dataclasses import dataclass

from .crypto import HashAlg, SHA256, algorithm
from .errors import InvalidRangeError

LEAF_PREFIX = b"\x00"
NODE_PREFIX = b"\x01"

_LEDGER_HEADER_MAGIC = "ledger v1"


def _block_bytes(index: int, payload: bytes) -> bytes:
    # Canonical block serialization: binding the index prevents reordering.
    return index.to_bytes(8, "big") + payload


@dataclass(frozen=True)
class Block:
    """One ledger entry; ``block_hash`` covers both payload and position."""

    index: int
    payload: bytes
    block_hash: bytes


@dataclass(frozen=True)
class ConsistencyProof:
    """Evidence that the size-``old_size`` tree is a prefix of the size-``new_size`` tree."""

    old_size: int
    new_size: int
    path: tuple[bytes, ...]


@dataclass(frozen=True)
class InclusionProof:
    """Evidence that a leaf sits at ``leaf_index`` in a tree of ``tree_size`` leaves."""

    leaf_index: int
    tree_size: int
    path: tuple[bytes, ...]


class Ledger:
    """An immutable append-only block sequence; ``append`` returns a new version."""

    __slots__ = ("id", "blocks", "alg")

    def __init__(self, ledger_id: bytes, blocks: tuple[Block, ...] = (), alg: HashAlg = SHA256):
        self.id = ledger_id
        self.blocks = blocks
        self.alg = alg

    @classmethod
    def from_payloads(cls, ledger_id: bytes, payloads, alg: HashAlg = SHA256) -> "Ledger":
        blocks = tuple(
            Block(index, payload, alg.hash(_block_bytes(index, payload)))
            for index, payload in enumerate(payloads)
        )
        return cls(ledger_id, blocks, alg)

    def __len__(self) -> int:
        return len(self.blocks)

    def append(self, payload: bytes) -> "Ledger":
        index = len(self.blocks)
        block = Block(index, payload, self.alg.hash(_block_bytes(index, payload)))
        return Ledger(self.id, self.blocks + (block,), self.alg)

    def leaf_hashes(self, size: int | None = None) -> list[bytes]:
        """Domain-separated leaf hashes for the first ``size`` blocks."""
        if size is None:
            size = len(self.blocks)
        return [self.alg.hash(LEAF_PREFIX + b.block_hash) for b in self.blocks[:size]]


def _split(n: int) -> int:
    """Largest power of two smaller than n (so k < n <= 2k)."""
    return 1 << ((n - 1).bit_length() - 1)


class _TreeHasher:
    """Memoized subtree heads over a fixed leaf-hash list."""

    def __init__(self, leaves: list[bytes], alg: HashAlg):
        self._leaves = leaves
        self._alg = alg
        self._memo: dict[tuple[int, int], bytes] = {}

    def head(self, lo: int, hi: int) -> bytes:
        n = hi - lo
        if n == 0:
            return self._alg.hash(b"")
        if n == 1:
            return self._leaves[lo]
        key = (lo, hi)
        cached = self._memo.get(key)
        if cached is None:
            k = _split(n)
            cached = self._alg.hash(
                NODE_PREFIX + self.head(lo, lo + k) + self.head(lo + k, hi)
            )
            self._memo[key] = cached
        return cached


def root_at(ledger: Ledger, size: int) -> bytes:
    """Merkle head over the first ``size`` blocks."""
    if size < 0 or size > len(ledger):
        raise InvalidRangeError(f"size {size} out of range for ledger of {len(ledger)} blocks")
    return _TreeHasher(ledger.leaf_hashes(size), ledger.alg).head(0, size)


def ledger_root(ledger: Ledger) -> bytes:
    """The ledger's current state digest (hash of "" for an empty ledger)."""
    return root_at(ledger, len(ledger))


def prove_consistency(ledger: Ledger, old_size: int, new_size: int) -> ConsistencyProof:
    """Consistency proof between the ledger's size-m and size-n states."""
    if old_size < 1 or old_size > new_size or new_size > len(ledger):
        raise InvalidRangeError(
            f"need 0 < m <= n <= {len(ledger)}, got m={old_size} n={new_size}"
        )
    hasher = _TreeHasher(ledger.leaf_hashes(new_size), ledger.alg)

    def subproof(m: int, lo: int, hi: int, complete: bool) -> list[bytes]:
        if m == hi - lo:
            return [] if complete else [hasher.head(lo, hi)]
        k = _split(hi - lo)
        if m <= k:
            return subproof(m, lo, lo + k, complete) + [hasher.head(lo + k, hi)]
        return subproof(m - k, lo + k, hi, False) + [hasher.head(lo, lo + k)]

    return ConsistencyProof(old_size, new_size, tuple(subproof(old_size, 0, new_size, True)))


def verify_consistency(
    old_root: bytes, new_root: bytes, proof: ConsistencyProof, alg: HashAlg = SHA256
) -> bool:
    """Check that ``proof`` links the two roots; malformed input yields False.

    Reconstructs both roots from the proof path by walking the implied node
    coordinates from the old tree's right edge up to the new tree's head.
    """
    m, n = proof.old_size, proof.new_size
    if m < 1 or m > n:
        return False
    if m == n:
        return not proof.path and old_root == new_root
    path = list(proof.path)
    if m & (m - 1) == 0:
        # The old root is itself a node of the new tree; it is not repeated
        # in the path, so seed the walk with it.
        path.insert(0, old_root)
    if not path:
        return False
    fn, sn = m - 1, n - 1
    while fn & 1:
        fn >>= 1
        sn >>= 1
    fr = sr = path[0]
    for sibling in path[1:]:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            fr = alg.hash(NODE_PREFIX + sibling + fr)
            sr = alg.hash(NODE_PREFIX + sibling + sr)
            while fn and not fn & 1:
                fn >>= 1
                sn >>= 1
        else:
            sr = alg.hash(NODE_PREFIX + sr + sibling)
        fn >>= 1
        sn >>= 1
    return sn == 0 and fr == old_root and sr == new_root


def prove_inclusion(ledger: Ledger, index: int) -> InclusionProof:
    """Inclusion proof for the block at ``index`` in the current tree."""
    n = len(ledger)
    if index < 0 or index >= n:
        raise InvalidRangeError(f"index {index} out of range for {n} blocks")
    hasher = _TreeHasher(ledger.leaf_hashes(n), ledger.alg)

    def path(i: int, lo: int, hi: int) -> list[bytes]:
        if hi - lo == 1:
            return []
        k = _split(hi - lo)
        if i - lo < k:
            return path(i, lo, lo + k) + [hasher.head(lo + k, hi)]
        return path(i, lo + k, hi) + [hasher.head(lo, lo + k)]

    return InclusionProof(index, n, tuple(path(index, 0, n)))


def verify_inclusion(
    root: bytes, block_hash: bytes, proof: InclusionProof, alg: HashAlg = SHA256
) -> bool:
    """Check that ``block_hash`` is the leaf at ``proof.leaf_index`` under ``root``."""
    if proof.leaf_index < 0 or proof.leaf_index >= proof.tree_size:
        return False
    fn, sn = proof.leaf_index, proof.tree_size - 1
    acc = alg.hash(LEAF_PREFIX + block_hash)
    for sibling in proof.path:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            acc = alg.hash(NODE_PREFIX + sibling + acc)
            while fn and not fn & 1:
                fn >>= 1
                sn >>= 1
        else:
            acc = alg.hash(NODE_PREFIX + acc + sibling)
        fn >>= 1
        sn >>= 1
    return sn == 0 and acc == root


def encode_consistency_proof(proof: ConsistencyProof) -> bytes:
    return (
        proof.old_size.to_bytes(8, "big")
        + proof.new_size.to_bytes(8, "big")
        + b"".join(proof.path)
    )


def decode_consistency_proof(data: bytes, alg: HashAlg) -> ConsistencyProof:
    if len(data) < 16 or (len(data) - 16) % alg.output_len:
        raise ValueError("truncated or misaligned consistency proof")
    old_size = int.from_bytes(data[:8], "big")
    new_size = int.from_bytes(data[8:16], "big")
    body = data[16:]
    step = alg.output_len
    path = tuple(body[i:i + step] for i in range(0, len(body), step))
    return ConsistencyProof(old_size, new_size, path)


def write_ledger(ledger: Ledger, path, encoding: str = "hex") -> None:
    """Export a ledger as newline-delimited encoded payloads under a one-line header."""
    if encoding not in ("hex", "base64"):
        raise ValueError(f"encoding must be 'hex' or 'base64', got {encoding!r}")
    if encoding == "base64":
        import base64

        enc = lambda b: base64.b64encode(b).decode("ascii")  # noqa: E731
    else:
        enc = bytes.hex
    lines = [
        f"{_LEDGER_HEADER_MAGIC} alg={ledger.alg.name} enc={encoding} id={ledger.id.hex()}"
    ]
    lines.extend(enc(block.payload) for block in ledger.blocks)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_ledger(path) -> Ledger:
    """Load a ledger export, recomputing every block hash from its payload."""
    with open(path, "r", encoding="ascii") as fh:
        content = fh.read()
    lines = content.splitlines()
    if not lines or not lines[0].startswith(_LEDGER_HEADER_MAGIC + " "):
        raise ValueError(f"not a ledger export: {path}")
    fields = dict(part.split("=", 1) for part in lines[0].split(" ")[2:])
    alg = algorithm(fields["alg"])
    encoding = fields["enc"]
    ledger_id = bytes.fromhex(fields["id"])
    if encoding == "base64":
        import base64

        dec = base64.b64decode
    elif encoding == "hex":
        dec = bytes.fromhex
    else:
        raise ValueError(f"unknown payload encoding {encoding!r} in {path}")
    return Ledger.from_payloads(ledger_id, (dec(line) for line in lines[1:]), alg)
