"""Hash-chain key material, slot digests, and 46-bit chunk transport.

The chain hash H is SHA-256 truncated to its low-order 128 bits, so keys
and digests are 16 bytes and travel in exactly three 46-bit chunks.  A
chain of length ``n`` runs from the secret master key down to the public
root commitment:

    chain position i (1 <= i <= n) holds H^(n-i)(master), position 0 holds
    the root, and hashing any position i key exactly i times reproduces
    the root.

Slot digests are HMAC-SHA256 (RFC 2104 key preprocessing) over the
concatenated 14-byte frames in transmission order, truncated to the same
128 bits.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Iterable, Sequence

KEY_BYTES = 16
CONTENT_BITS = 46
CHUNKS_PER_VALUE = 3  # ceil(128 / 46)
PAD_BITS = CHUNKS_PER_VALUE * CONTENT_BITS - 8 * KEY_BYTES  # 10 zero bits in chunk 2

DEFAULT_CHAIN_LENGTH = 1 << 16


class ChainExhaustedError(ValueError):
    """Requested a chain position beyond the provisioned length."""


class IncompleteChunksError(ValueError):
    """Chunk set is missing at least one of ids 0..2."""


class ChunkConflictError(ValueError):
    """Same chunk id seen with differing content (possible injection)."""


def hash_step(value: bytes) -> bytes:
    """One application of the chain hash H."""
    return hashlib.sha256(value).digest()[KEY_BYTES:]


def hash_times(value: bytes, count: int) -> bytes:
    """H applied ``count`` times (count >= 0)."""
    for _ in range(count):
        value = hashlib.sha256(value).digest()[KEY_BYTES:]
    return value


def derive_root_key(master_key: bytes, n: int) -> bytes:
    """Public root commitment: H applied n times to the master key."""
    _check_key(master_key)
    if n < 1:
        raise ValueError(f"chain length must be >= 1, got {n}")
    return hash_times(master_key, n)


@dataclass(frozen=True)
class SlotKey:
    index: int
    key: bytes


def derive_slot_key(master_key: bytes, n: int, i: int) -> SlotKey:
    """Key at chain position i, i.e. H^(n-i)(master);  position n is the
    master key itself."""
    _check_key(master_key)
    if i < 1:
        raise ValueError(f"chain position must be >= 1, got {i}")
    if i > n:
        raise ChainExhaustedError(f"position {i} exceeds chain length {n}")
    return SlotKey(index=i, key=hash_times(master_key, n - i))


def verify_slot_key(key: bytes, i: int, root_key: bytes) -> bool:
    """True iff hashing ``key`` exactly i times yields the root commitment."""
    if i < 1:
        raise ValueError(f"chain position must be >= 1, got {i}")
    return hash_times(key, i) == root_key


class KeyChain:
    """Full chain for one flight, with every position cached up front.

    Behaves exactly like the pure derivations above, just without the
    repeated hashing a sender would otherwise pay each slot.
    """

    def __init__(self, master_key: bytes, n: int):
        _check_key(master_key)
        if n < 1:
            raise ValueError(f"chain length must be >= 1, got {n}")
        self.n = n
        # keys[i] is chain position i; keys[0] is the public root
        keys = [b""] * (n + 1)
        keys[n] = master_key
        for i in range(n - 1, -1, -1):
            keys[i] = hash_step(keys[i + 1])
        self._keys = keys

    @property
    def root_key(self) -> bytes:
        return self._keys[0]

    def slot_key(self, i: int) -> SlotKey:
        if i < 1:
            raise ValueError(f"chain position must be >= 1, got {i}")
        if i > self.n:
            raise ChainExhaustedError(f"position {i} exceeds chain length {self.n}")
        return SlotKey(index=i, key=self._keys[i])


def slot_digest(messages: Sequence[bytes], key: bytes) -> bytes:
    """128-bit HMAC over the slot's frames, concatenated in send order."""
    _check_key(key)
    if not messages:
        raise ValueError("slot digest requires at least one message")
    for m in messages:
        if len(m) != 14:
            raise ValueError(f"slot messages must be 14 bytes, got {len(m)}")
    return hmac.new(key, b"".join(messages), hashlib.sha256).digest()[KEY_BYTES:]


def chunk_value(value: bytes) -> list[tuple[int, int]]:
    """Split a 128-bit value into (chunk_id, 46-bit content) pairs.

    Chunk 0 carries bits [0, 46), chunk 1 bits [46, 92), chunk 2 bits
    [92, 128) followed by 10 zero pad bits.
    """
    _check_key(value)
    word = int.from_bytes(value, "big") << PAD_BITS
    mask = (1 << CONTENT_BITS) - 1
    return [
        (cid, (word >> (CONTENT_BITS * (CHUNKS_PER_VALUE - 1 - cid))) & mask)
        for cid in range(CHUNKS_PER_VALUE)
    ]


def reassemble_value(chunks: Iterable[tuple[int, int]]) -> bytes:
    """Inverse of :func:`chunk_value`.

    Accepts duplicates as long as they agree; raises
    :class:`IncompleteChunksError` when an id is missing and
    :class:`ChunkConflictError` when one id was seen with two contents.
    """
    seen: dict[int, int] = {}
    for cid, content in chunks:
        if not 0 <= cid < CHUNKS_PER_VALUE:
            raise ValueError(f"chunk_id must be 0..{CHUNKS_PER_VALUE - 1}, got {cid}")
        if not 0 <= content < (1 << CONTENT_BITS):
            raise ValueError(f"chunk content must fit in {CONTENT_BITS} bits")
        if cid in seen and seen[cid] != content:
            raise ChunkConflictError(f"chunk {cid} seen with conflicting contents")
        seen[cid] = content
    missing = [cid for cid in range(CHUNKS_PER_VALUE) if cid not in seen]
    if missing:
        raise IncompleteChunksError(f"missing chunk ids {missing}")
    word = 0
    for cid in range(CHUNKS_PER_VALUE):
        word = (word << CONTENT_BITS) | seen[cid]
    return (word >> PAD_BITS).to_bytes(KEY_BYTES, "big")


def _check_key(value: bytes) -> None:
    if len(value) != KEY_BYTES:
        raise ValueError(f"expected a {KEY_BYTES}-byte value, got {len(value)} bytes")
