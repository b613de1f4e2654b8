"""Fixed-size transactions and the FIFO mempool.

Wire layout (50 bytes, big-endian)::

    0-7 nonce | 8-15 sender_id | 16-23 created_at_ms | 24-41 payload | 42-49 auth_tag

``auth_tag`` is the first 8 bytes of SHA-256(commitment || nonce || payload),
where ``commitment`` is the sender's registered credential commitment.
"""

from __future__ import annotations

import hashlib
import struct
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .errors import InvalidSession, PayloadTooLarge, WrongLength

TX_SIZE = 50
PAYLOAD_SIZE = 18
TAG_SIZE = 8

_TX = struct.Struct(">QQQ18s8s")
assert _TX.size == TX_SIZE


@dataclass(frozen=True)
class Transaction:
    nonce: int
    sender_id: int
    created_at_ms: int
    payload: bytes
    auth_tag: bytes


def compute_auth_tag(commitment: bytes, nonce: int, payload: bytes) -> bytes:
    return hashlib.sha256(commitment + struct.pack(">Q", nonce) + payload).digest()[:TAG_SIZE]


def serialize_tx(tx: Transaction) -> bytes:
    return _TX.pack(tx.nonce, tx.sender_id, tx.created_at_ms, tx.payload, tx.auth_tag)


def deserialize_tx(data: bytes) -> Transaction:
    """Parse 50 bytes into a Transaction. The tag is not checked here."""
    if len(data) != TX_SIZE:
        raise WrongLength(f"transaction must be {TX_SIZE} bytes, got {len(data)}")
    return Transaction(*_TX.unpack(data))


def validate_tx(tx: Transaction, registry) -> bool:
    if tx.sender_id == 0 or len(tx.payload) != PAYLOAD_SIZE:
        return False
    commitment = registry.commitment(tx.sender_id)
    if commitment is None:
        return False
    return compute_auth_tag(commitment, tx.nonce, tx.payload) == tx.auth_tag


@dataclass
class Mempool:
    queue: deque = field(default_factory=deque)
    next_nonce: dict[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.queue)

    def drain(self, max_n: int, cutoff_ms: Optional[int] = None) -> list[Transaction]:
        """Pop up to ``max_n`` oldest transactions.

        With ``cutoff_ms`` set, draining stops at the first transaction created
        after it (used to model delivery delay).
        """
        out = []
        q = self.queue
        while q and len(out) < max_n:
            if cutoff_ms is not None and q[0].created_at_ms > cutoff_ms:
                break
            out.append(q.popleft())
        return out


def create_transaction(session, registry, payload: bytes, pool: Mempool, now_ms: int):
    """Build an authenticated transaction for the session's user and queue it.

    Returns ``(pool, tx)``; the pool is updated in place.
    """
    if len(payload) > PAYLOAD_SIZE:
        raise PayloadTooLarge(f"payload is {len(payload)} bytes, limit {PAYLOAD_SIZE}")
    if session.nft_id == 0 or not registry.session_is_valid(session):
        raise InvalidSession("session does not match a registered identity")
    sender = session.nft_id
    nonce = pool.next_nonce.get(sender, 0)
    body = bytes(payload).ljust(PAYLOAD_SIZE, b"\x00")
    tag = compute_auth_tag(registry.commitment(sender), nonce, body)
    tx = Transaction(nonce, sender, now_ms, body, tag)
    pool.next_nonce[sender] = nonce + 1
    pool.queue.append(tx)
    return pool, tx


def drain_for_block(pool: Mempool, max_n: int, cutoff_ms: Optional[int] = None):
    """Returns ``(pool, txs)`` with up to ``max_n`` oldest transactions removed."""
    return pool, pool.drain(max_n, cutoff_ms)
