import random
import struct

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_chain
from nftpos.chain import Block, Chain, append_block, encode_block, hash_header, make_genesis, new_chain
from nftpos.errors import (
    BadMagic,
    ChainInvalid,
    CorruptRecord,
    InvalidChain,
    IoFailure,
    TipMismatch,
    UnsupportedVersion,
)
from nftpos.persistence import (
    append_block_to_file,
    encode_chain_file,
    load_chain,
    load_snapshot,
    store_chain,
    store_snapshot,
)
from nftpos.stake import StakeLedger


@pytest.fixture
def chain():
    return random_chain(random.Random(10), n_blocks=12)[0]


def test_round_trip(tmp_path, chain):
    path = tmp_path / "c.nftc"
    store_chain(chain, path)
    assert load_chain(path) == chain


def test_file_layout(tmp_path):
    path = tmp_path / "g.nftc"
    store_chain(new_chain(), path)
    data = path.read_bytes()
    genesis = encode_block(make_genesis())
    assert data[:4] == b"NFTC"
    assert data[4:6] == b"\x00\x01"
    assert data[6:10] == struct.pack(">I", len(genesis))
    assert data[10:10 + len(genesis)] == genesis
    assert data[10 + len(genesis):] == struct.pack(">I", 32) + hash_header(make_genesis().header)


def test_store_is_deterministic(tmp_path, chain):
    store_chain(chain, tmp_path / "a")
    store_chain(chain, tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_store_refuses_tampered_chain(tmp_path, chain):
    blocks = list(chain.blocks)
    b = blocks[3]
    blocks[3] = Block(b.header, b.body + bytes(50))
    with pytest.raises(InvalidChain):
        store_chain(Chain(tuple(blocks), chain.head), tmp_path / "bad")
    assert not (tmp_path / "bad").exists()
    assert list(tmp_path.iterdir()) == []


def test_flipped_body_byte_names_height(tmp_path):
    rng = random.Random(3)
    chain, _ = random_chain(rng, n_blocks=6, max_txs=3)
    target = next(i for i in range(1, len(chain)) if chain.blocks[i].header.tx_count)
    path = tmp_path / "c"
    store_chain(chain, path)
    data = bytearray(path.read_bytes())
    offset = 6
    for block in chain.blocks[:target]:
        offset += 4 + len(encode_block(block))
    data[offset + 4 + 92 + 7] ^= 0x10
    path.write_bytes(bytes(data))
    with pytest.raises(ChainInvalid) as exc:
        load_chain(path)
    assert exc.value.height == target
    assert str(target) in str(exc.value)


def test_truncated_final_record(tmp_path, chain):
    path = tmp_path / "c"
    store_chain(chain, path)
    data = path.read_bytes()
    for cut in (1, 20, 36, 37, 60):
        path.write_bytes(data[:-cut])
        with pytest.raises(CorruptRecord) as exc:
            load_chain(path)
        assert exc.value.offset <= len(data) - cut


def test_bad_magic_and_version(tmp_path, chain):
    path = tmp_path / "c"
    store_chain(chain, path)
    data = path.read_bytes()
    path.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(BadMagic):
        load_chain(path)
    path.write_bytes(data[:4] + b"\x00\x02" + data[6:])
    with pytest.raises(UnsupportedVersion):
        load_chain(path)
    path.write_bytes(b"NF")
    with pytest.raises(BadMagic):
        load_chain(path)


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_chain(tmp_path / "nope")


def test_unwritable_destination(tmp_path, chain):
    with pytest.raises(IoFailure):
        store_chain(chain, tmp_path / "no" / "such" / "dir" / "c")


def test_append_next_block(tmp_path, chain):
    path = tmp_path / "c"
    store_chain(chain, path)
    before = path.read_bytes()
    longer = append_block(chain, [], 5, chain.tip.header.timestamp_ms + 1)
    append_block_to_file(path, longer.tip)
    after = path.read_bytes()
    assert after[:len(before) - 36] == before[:-36]
    loaded = load_chain(path)
    assert loaded == longer
    assert loaded.tip.height == chain.tip.height + 1


def test_append_wrong_parent_leaves_file_alone(tmp_path, chain):
    path = tmp_path / "c"
    store_chain(chain, path)
    before = path.read_bytes()
    stray = append_block(new_chain(), [], 5, 1).tip
    with pytest.raises(TipMismatch):
        append_block_to_file(path, stray)
    assert path.read_bytes() == before


def test_append_bootstraps_from_genesis(tmp_path):
    path = tmp_path / "fresh"
    with pytest.raises(TipMismatch):
        append_block_to_file(path, append_block(new_chain(), [], 5, 1).tip)
    assert not path.exists()
    append_block_to_file(path, make_genesis())
    assert path.read_bytes()[:6] == b"NFTC\x00\x01"
    assert load_chain(path) == new_chain()
    chain = new_chain()
    for t in (5, 9, 9, 30):
        chain = append_block(chain, [], 3, t)
        append_block_to_file(path, chain.tip)
    assert load_chain(path) == chain
    assert path.read_bytes() == encode_chain_file(chain)


def test_interrupted_append_is_detected(tmp_path, chain):
    path = tmp_path / "c"
    store_chain(chain, path)
    longer = append_block(chain, [], 5, chain.tip.header.timestamp_ms)
    append_block_to_file(path, longer.tip)
    data = path.read_bytes()
    path.write_bytes(data[:-10])  # crash part-way through the new seal
    with pytest.raises(CorruptRecord):
        load_chain(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_round_trip_property(tmp_path_factory, seed):
    chain, _ = random_chain(random.Random(seed), n_blocks=random.Random(seed).randint(0, 30))
    path = tmp_path_factory.mktemp("rt") / "c"
    store_chain(chain, path)
    assert load_chain(path) == chain


def test_snapshot_round_trip(tmp_path):
    _, registry = random_chain(random.Random(1), n_blocks=1, n_users=5)
    registry.mint("ünïcode", b"pw")
    ledger = StakeLedger(registry)
    ledger.record(2, 40)
    ledger.record(6, 7)
    path = tmp_path / "state"
    store_snapshot(registry, ledger, path)
    reg2, ledger2 = load_snapshot(path)
    assert reg2.identities == registry.identities
    assert reg2.next_id == registry.next_id
    assert ledger2.stakes == ledger.stakes and ledger2.total == 47
    data = path.read_bytes()
    path.write_bytes(b"NFTC" + data[4:])
    with pytest.raises(BadMagic):
        load_snapshot(path)
