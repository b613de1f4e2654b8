"""Builders shared by the test modules."""

import random

from nftpos.chain import append_block, new_chain
from nftpos.identity import IdentityRegistry
from nftpos.stake import StakeLedger
from nftpos.txpool import Mempool, create_transaction


def registry_with(n, now_ms=0):
    """Registry of ``n`` users plus their secrets and login sessions."""
    registry = IdentityRegistry()
    secrets, sessions = [], []
    for i in range(n):
        secret = f"secret-{i}".encode()
        ident = registry.mint(f"user{i}", secret)
        secrets.append(secret)
        sessions.append(registry.authenticate(ident.nft_id, secret, now_ms))
    return registry, secrets, sessions


def ledger_with(stakes):
    """Ledger holding exactly ``stakes`` ({nft_id: amount}); ids are minted as needed."""
    registry = IdentityRegistry()
    top = max(stakes, default=0)
    for i in range(1, top + 1):
        registry.mint(f"u{i}", b"x")
    ledger = StakeLedger(registry)
    for nft_id, amount in stakes.items():
        if amount:
            ledger.record(nft_id, amount)
    return ledger


def random_chain(rng: random.Random, n_blocks=None, max_txs=4, n_users=3):
    registry, _, sessions = registry_with(n_users)
    pool = Mempool()
    chain = new_chain()
    n_blocks = rng.randint(1, 200) if n_blocks is None else n_blocks
    t = 0
    for _ in range(n_blocks):
        t += rng.randint(0, 2000)
        txs = []
        for _ in range(rng.randint(0, max_txs)):
            session = rng.choice(sessions)
            payload = rng.randbytes(rng.randint(0, 18))
            _, tx = create_transaction(session, registry, payload, pool, t)
            txs.append(tx)
        pool.drain(len(txs))
        chain = append_block(chain, txs, rng.choice(sessions).nft_id, t)
    return chain, registry
