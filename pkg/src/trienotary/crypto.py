"""Hash-function selection and bit extraction over digests.

Every digest in the system (node references, search keys, ledger roots)
comes from one hash algorithm fixed per deployment. Digests are plain
``bytes`` of the algorithm's output length; the all-zero digest is reserved
as the "no previous version" sentinel and never occurs as a real hash
output in practice.

Search keys are digests read as bit strings, most-significant bit first.
``label_at`` extracts the fixed-width chunk of a key that selects the
outgoing edge at a given trie depth.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import KeyExhaustedError


@dataclass(frozen=True)
class HashAlg:
    """A named cryptographic hash with a fixed output length in bytes."""

    name: str
    output_len: int

    def hash(self, data: bytes) -> bytes:
        return hashlib.new(self.name, data).digest()

    @property
    def zero(self) -> bytes:
        """The reserved all-zero sentinel digest."""
        return b"\x00" * self.output_len

    @property
    def bit_length(self) -> int:
        return 8 * self.output_len


SHA256 = HashAlg("sha256", 32)
SHA512 = HashAlg("sha512", 64)

_BY_NAME = {alg.name: alg for alg in (SHA256, SHA512)}


def algorithm(name: str) -> HashAlg:
    """Look up a supported algorithm by name ("sha256" or "sha512")."""
    try:
        return _BY_NAME[name.lower().replace("-", "")]
    except KeyError:
        raise ValueError(f"unsupported hash algorithm: {name!r}") from None


def label_width(r: int) -> int:
    """Bits per edge label for arity ``r``; validates r is a power of two in [2, 256]."""
    if r < 2 or r > 256 or r & (r - 1):
        raise ValueError(f"arity must be a power of two in [2, 256], got {r}")
    return r.bit_length() - 1


def max_depth(key_len: int, r: int) -> int:
    """Number of full labels extractable from a ``key_len``-byte key."""
    return (8 * key_len) // label_width(r)


def label_at(key: bytes, depth: int, r: int) -> int:
    """Edge label at ``depth`` for a key walked in log2(r)-bit chunks, MSB first.

    Raises KeyExhaustedError when the requested chunk runs past the end of
    the key, which signals a full-length key prefix collision upstream.
    """
    w = label_width(r)
    start = depth * w
    if depth < 0 or start + w > 8 * len(key):
        raise KeyExhaustedError(
            f"label {depth} needs bits [{start}, {start + w}) of a {8 * len(key)}-bit key"
        )
    # A label spans at most two bytes (w <= 8).
    byte0, bit0 = divmod(start, 8)
    window = int.from_bytes(key[byte0:byte0 + 2].ljust(2, b"\x00"), "big")
    return (window >> (16 - bit0 - w)) & (r - 1)
