"""Append-only chain file and registry/ledger snapshot file.

Chain file layout::

    b"NFTC" | version u16 BE | { u32 BE length | block bytes }* | u32 BE 32 | head digest

Every block record is at least a full 92-byte header, so a 32-byte record
can only be the trailing head seal: the digest of the tip header. The seal
is what lets a reader notice a rewritten tip header, which hash linkage
alone cannot do. Appending overwrites the old seal with the new block
record followed by a fresh seal; block records already on disk are never
touched.

Snapshot file layout uses the same framing under magic ``b"NFTS"``; each
record starts with a one-byte tag (``I`` identity, ``S`` stake).
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

from .chain import (
    DIGEST_SIZE,
    HEADER_SIZE,
    Block,
    Chain,
    decode_block,
    encode_block,
    hash_header,
    make_genesis,
    verify_chain,
)
from .errors import (
    BadMagic,
    ChainInvalid,
    CorruptRecord,
    InvalidChain,
    IoFailure,
    TipMismatch,
    UnsupportedVersion,
)
from .identity import IdentityRegistry, NftIdentity
from .stake import StakeLedger

CHAIN_MAGIC = b"NFTC"
SNAPSHOT_MAGIC = b"NFTS"
VERSION = 1
PREAMBLE_SIZE = 6
SEAL_SIZE = 4 + DIGEST_SIZE

_LEN = struct.Struct(">I")


def _preamble(magic: bytes) -> bytes:
    return magic + struct.pack(">H", VERSION)


def _frame(payload: bytes) -> bytes:
    return _LEN.pack(len(payload)) + payload


def _seal(head: bytes) -> bytes:
    return _frame(head)


def encode_chain_file(chain: Chain) -> bytes:
    parts = [_preamble(CHAIN_MAGIC)]
    parts.extend(_frame(encode_block(b)) for b in chain.blocks)
    parts.append(_seal(chain.head))
    return b"".join(parts)


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _read(path: Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def _check_preamble(data: bytes, magic: bytes) -> None:
    if data[:4] != magic:
        raise BadMagic(f"expected magic {magic!r}, found {data[:4]!r}")
    if len(data) < PREAMBLE_SIZE:
        raise CorruptRecord(4, "file ends inside the version field")
    (version,) = struct.unpack_from(">H", data, 4)
    if version != VERSION:
        raise UnsupportedVersion(f"chain file version {version} is not supported (expected {VERSION})")


def _records(data: bytes):
    """Yield (offset, payload) for each length-prefixed record."""
    pos = PREAMBLE_SIZE
    while pos < len(data):
        if pos + 4 > len(data):
            raise CorruptRecord(pos, "truncated length prefix")
        (n,) = _LEN.unpack_from(data, pos)
        if pos + 4 + n > len(data):
            raise CorruptRecord(pos, f"record declares {n} bytes but only {len(data) - pos - 4} remain")
        yield pos, data[pos + 4:pos + 4 + n]
        pos += 4 + n


def decode_chain_file(data: bytes) -> Chain:
    """Parse a chain file and return the chain only if it verifies."""
    _check_preamble(data, CHAIN_MAGIC)
    blocks = []
    head = None
    for offset, payload in _records(data):
        if head is not None:
            raise CorruptRecord(offset, "record after the head seal")
        if len(payload) == DIGEST_SIZE:
            head = payload
        elif len(payload) >= HEADER_SIZE:
            blocks.append(decode_block(payload))
        else:
            raise CorruptRecord(offset, f"record of {len(payload)} bytes is neither a block nor a seal")
    if head is None:
        raise CorruptRecord(len(data), "missing head seal (incomplete write?)")
    if not blocks:
        raise CorruptRecord(PREAMBLE_SIZE, "file holds no blocks")
    chain = Chain(tuple(blocks), head)
    report = verify_chain(chain)
    if not report.ok:
        raise ChainInvalid(report)
    return chain


def store_chain(chain: Chain, path) -> None:
    report = verify_chain(chain)
    if not report.ok:
        raise InvalidChain(report)
    _atomic_write(Path(path), encode_chain_file(chain))


def load_chain(path) -> Chain:
    return decode_chain_file(_read(Path(path)))


def append_block_to_file(path, block: Block) -> None:
    """Append one block record to a chain file, creating it for genesis."""
    path = Path(path)
    if not path.exists() or path.stat().st_size == 0:
        if block != make_genesis():
            raise TipMismatch(f"{path} is empty; only the genesis block can start a chain file")
        _atomic_write(path, encode_chain_file(Chain.from_blocks([block])))
        return
    new_head = hash_header(block.header)
    try:
        with open(path, "r+b") as fh:
            head = fh.read(PREAMBLE_SIZE)
            _check_preamble(head, CHAIN_MAGIC)
            size = fh.seek(0, os.SEEK_END)
            if size < PREAMBLE_SIZE + SEAL_SIZE:
                raise CorruptRecord(size, "file too short to hold a head seal")
            fh.seek(size - SEAL_SIZE)
            seal = fh.read(SEAL_SIZE)
            if _LEN.unpack_from(seal)[0] != DIGEST_SIZE:
                raise CorruptRecord(size - SEAL_SIZE, "missing head seal")
            if seal[4:] != block.header.prev_hash:
                raise TipMismatch("block prev_hash does not match the file's tip")
            fh.seek(size - SEAL_SIZE)
            fh.write(_frame(encode_block(block)) + _seal(new_head))
            fh.flush()
            os.fsync(fh.fileno())
    except OSError as exc:
        raise IoFailure(f"cannot append to {path}: {exc}") from exc


# Registry / ledger snapshot --------------------------------------------

def encode_snapshot(registry: IdentityRegistry, ledger: StakeLedger | None = None) -> bytes:
    parts = [_preamble(SNAPSHOT_MAGIC)]
    for nft_id in sorted(registry.identities):
        ident = registry.identities[nft_id]
        label = ident.owner_label.encode("utf-8")
        parts.append(_frame(b"I" + struct.pack(">Q", nft_id) + ident.credential_commitment + label))
    if ledger is not None:
        for nft_id, stake in ledger.snapshot():
            parts.append(_frame(b"S" + struct.pack(">QQ", nft_id, stake)))
    return b"".join(parts)


def decode_snapshot(data: bytes) -> tuple[IdentityRegistry, StakeLedger]:
    _check_preamble(data, SNAPSHOT_MAGIC)
    registry = IdentityRegistry()
    ledger = StakeLedger(registry)
    for offset, payload in _records(data):
        tag = payload[:1]
        if tag == b"I" and len(payload) >= 41:
            nft_id = struct.unpack_from(">Q", payload, 1)[0]
            try:
                label = payload[41:].decode("utf-8")
            except UnicodeDecodeError:
                raise CorruptRecord(offset, "owner label is not UTF-8") from None
            ident = NftIdentity(nft_id, label, bytes(payload[9:41]))
            registry.identities[nft_id] = ident
            registry.next_id = max(registry.next_id, nft_id + 1)
        elif tag == b"S" and len(payload) == 17:
            nft_id, stake = struct.unpack_from(">QQ", payload, 1)
            if stake:
                ledger.record(nft_id, stake)
        else:
            raise CorruptRecord(offset, "unrecognised snapshot record")
    return registry, ledger


def store_snapshot(registry: IdentityRegistry, ledger: StakeLedger | None, path) -> None:
    _atomic_write(Path(path), encode_snapshot(registry, ledger))


def load_snapshot(path) -> tuple[IdentityRegistry, StakeLedger]:
    return decode_snapshot(_read(Path(path)))
