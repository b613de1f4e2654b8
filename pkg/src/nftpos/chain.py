"""Blocks, header hashing and hash-chain verification.

Headers have a fixed 92-byte big-endian encoding::

    height u64 | prev_hash 32B | timestamp_ms u64 | validator_id u64 | tx_count u32 | tx_root 32B

A block on the wire is its header encoding followed by the raw body, which is
the concatenation of 50-byte serialized transactions.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .errors import EmptyValidator, MalformedTransaction, NonMonotoneTime, OversizedBlock
from .txpool import TX_SIZE, Transaction, serialize_tx

HEADER_SIZE = 92
DIGEST_SIZE = 32
ZERO_HASH = bytes(DIGEST_SIZE)
EMPTY_ROOT = hashlib.sha256(b"").digest()
DEFAULT_MAX_TXS_PER_BLOCK = 1000

_HEADER = struct.Struct(">Q32sQQI32s")
assert _HEADER.size == HEADER_SIZE


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    timestamp_ms: int
    validator_id: int
    tx_count: int
    tx_root: bytes


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    body: bytes = b""

    @property
    def height(self) -> int:
        return self.header.height

    def transactions(self) -> list[bytes]:
        """Split the body into its 50-byte transaction records."""
        return [self.body[i:i + TX_SIZE] for i in range(0, len(self.body), TX_SIZE)]


@dataclass(frozen=True)
class Chain:
    """An immutable run of blocks starting at genesis.

    ``head`` is the digest of the tip header recorded when the chain was
    built. Hash linkage alone cannot expose a rewritten tip header (nothing
    points at it yet), so the head acts as the external anchor for the tip.
    """

    blocks: tuple[Block, ...]
    head: bytes

    @classmethod
    def from_blocks(cls, blocks: Iterable[Block]) -> "Chain":
        blocks = tuple(blocks)
        head = hash_header(blocks[-1].header) if blocks else ZERO_HASH
        return cls(blocks, head)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]


@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    height: Optional[int] = None
    invariant: Optional[str] = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "ok"
        return f"height {self.height}: {self.invariant} ({self.detail})"


def encode_header(h: BlockHeader) -> bytes:
    if len(h.prev_hash) != DIGEST_SIZE or len(h.tx_root) != DIGEST_SIZE:
        raise ValueError("prev_hash and tx_root must be 32 bytes")
    try:
        return _HEADER.pack(h.height, h.prev_hash, h.timestamp_ms, h.validator_id, h.tx_count, h.tx_root)
    except struct.error as exc:
        raise ValueError(f"header field out of range: {exc}") from None


def decode_header(data: bytes) -> BlockHeader:
    if len(data) != HEADER_SIZE:
        raise ValueError(f"header must be {HEADER_SIZE} bytes, got {len(data)}")
    return BlockHeader(*_HEADER.unpack(data))


def encode_block(block: Block) -> bytes:
    return encode_header(block.header) + block.body


def decode_block(data: bytes) -> Block:
    """Parse header + body. No invariant is checked here; see verify_chain."""
    if len(data) < HEADER_SIZE:
        raise ValueError(f"block shorter than a header ({len(data)} bytes)")
    return Block(decode_header(bytes(data[:HEADER_SIZE])), bytes(data[HEADER_SIZE:]))


def hash_header(h: BlockHeader) -> bytes:
    return hashlib.sha256(encode_header(h)).digest()


def make_genesis() -> Block:
    header = BlockHeader(
        height=0,
        prev_hash=ZERO_HASH,
        timestamp_ms=0,
        validator_id=0,
        tx_count=0,
        tx_root=EMPTY_ROOT,
    )
    return Block(header, b"")


def new_chain() -> Chain:
    return Chain.from_blocks([make_genesis()])


def _tx_bytes(tx: Union[Transaction, bytes]) -> bytes:
    raw = serialize_tx(tx) if isinstance(tx, Transaction) else bytes(tx)
    if len(raw) != TX_SIZE:
        raise MalformedTransaction(f"transaction encodes to {len(raw)} bytes, expected {TX_SIZE}")
    return raw


def make_block(
    parent: BlockHeader,
    txs: Sequence[Union[Transaction, bytes]],
    validator_id: int,
    timestamp_ms: int,
    max_txs_per_block: int = DEFAULT_MAX_TXS_PER_BLOCK,
) -> Block:
    """Build the child of ``parent``, enforcing the append preconditions."""
    if validator_id == 0:
        raise EmptyValidator("validator_id 0 is reserved for genesis")
    if timestamp_ms < parent.timestamp_ms:
        raise NonMonotoneTime(f"timestamp {timestamp_ms} precedes tip timestamp {parent.timestamp_ms}")
    if len(txs) > max_txs_per_block:
        raise OversizedBlock(f"{len(txs)} transactions exceed the limit of {max_txs_per_block}")
    body = b"".join(_tx_bytes(tx) for tx in txs)
    header = BlockHeader(
        height=parent.height + 1,
        prev_hash=hash_header(parent),
        timestamp_ms=timestamp_ms,
        validator_id=validator_id,
        tx_count=len(txs),
        tx_root=hashlib.sha256(body).digest(),
    )
    return Block(header, body)


def append_block(
    chain: Chain,
    txs: Sequence[Union[Transaction, bytes]],
    validator_id: int,
    timestamp_ms: int,
    max_txs_per_block: int = DEFAULT_MAX_TXS_PER_BLOCK,
) -> Chain:
    """Return ``chain`` extended by one block; ``chain`` itself is untouched."""
    block = make_block(chain.tip.header, txs, validator_id, timestamp_ms, max_txs_per_block)
    return Chain(chain.blocks + (block,), hash_header(block.header))


def _fail(height, invariant, detail):
    return VerifyReport(False, height, invariant, detail)


def verify_chain(chain: Chain) -> VerifyReport:
    """Check every block invariant and the hash linkage.

    A broken link between blocks i-1 and i is attributed to height i-1, so
    a tampered header is always reported at or before its own height.
    """
    blocks = chain.blocks
    if not blocks:
        return _fail(0, "genesis", "chain has no blocks")

    genesis = blocks[0]
    if genesis.header != make_genesis().header or genesis.body:
        return _fail(0, "genesis", "block 0 is not the canonical genesis block")

    prev = genesis.header
    try:
        prev_digest = hash_header(prev)
    except ValueError as exc:
        return _fail(0, "encoding", str(exc))

    for i in range(1, len(blocks)):
        h = blocks[i].header
        body = blocks[i].body
        if h.prev_hash != prev_digest:
            return _fail(i - 1, "linkage", f"header hash differs from prev_hash recorded at height {i}")
        if h.height != i or h.height != prev.height + 1:
            return _fail(i, "height", f"expected {i}, found {h.height}")
        if h.timestamp_ms < prev.timestamp_ms:
            return _fail(i, "timestamp", f"{h.timestamp_ms} < parent {prev.timestamp_ms}")
        if h.validator_id == 0:
            return _fail(i, "validator", "validator_id is 0")
        if len(body) % TX_SIZE:
            return _fail(i, "body_length", f"body length {len(body)} is not a multiple of {TX_SIZE}")
        if h.tx_count * TX_SIZE != len(body):
            return _fail(i, "tx_count", f"tx_count {h.tx_count} but body holds {len(body) // TX_SIZE}")
        if hashlib.sha256(body).digest() != h.tx_root:
            return _fail(i, "tx_root", "body digest does not match tx_root")
        try:
            prev_digest = hash_header(h)
        except ValueError as exc:
            return _fail(i, "encoding", str(exc))
        prev = h

    if chain.head != prev_digest:
        return _fail(len(blocks) - 1, "head", "tip header does not match the recorded head digest")
    return VerifyReport(True)

