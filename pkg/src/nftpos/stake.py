"""Stake bookkeeping and the richest-stakeholder validator election."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional

from .errors import NoStake, StakeOverflow, UnregisteredId, ZeroAmount
from .identity import IdentityRegistry

MAX_STAKE = 2**64 - 1
MAJORITY_THRESHOLD = Fraction(51, 100)


@dataclass(frozen=True)
class ElectionResult:
    round: int
    validator_id: int
    validator_stake: int
    stake_fraction: Fraction


@dataclass
class StakeLedger:
    """Accumulated shared resources per NFT id, in integer stake units.

    Stake is cumulative and never spent. Only ids minted in ``registry`` may
    hold stake.
    """

    registry: IdentityRegistry
    stakes: dict[int, int] = field(default_factory=dict)
    total: int = 0

    def _credit(self, nft_id: int, amount: int) -> None:
        if not self.registry.is_registered(nft_id):
            raise UnregisteredId(f"nft id {nft_id} is not registered")
        new = self.stakes.get(nft_id, 0) + amount
        if new > MAX_STAKE or self.total + amount > MAX_STAKE:
            raise StakeOverflow(f"stake for {nft_id} would exceed the 64-bit range")
        if amount:
            self.stakes[nft_id] = new
            self.total += amount

    def record(self, nft_id: int, amount: int) -> "StakeLedger":
        if amount <= 0:
            raise ZeroAmount(f"stake amount must be positive, got {amount}")
        self._credit(nft_id, amount)
        return self

    def reward(self, validator_id: int, reward: int) -> "StakeLedger":
        if reward < 0:
            raise ValueError("reward must be non-negative")
        self._credit(validator_id, reward)
        return self

    def stake_of(self, nft_id: int) -> int:
        return self.stakes.get(nft_id, 0)

    def fraction(self, nft_id: int) -> Fraction:
        if self.total == 0:
            raise NoStake("ledger holds no stake")
        return Fraction(self.stake_of(nft_id), self.total)

    def snapshot(self) -> tuple[tuple[int, int], ...]:
        """Sorted (nft_id, stake) pairs; stable regardless of insertion order."""
        return tuple(sorted(self.stakes.items()))

    def check_total(self) -> bool:
        return self.total == sum(self.stakes.values())

    def copy(self) -> "StakeLedger":
        return StakeLedger(self.registry, dict(self.stakes), self.total)


def record_stake(ledger: StakeLedger, nft_id: int, amount: int) -> StakeLedger:
    return ledger.record(nft_id, amount)


def apply_reward(ledger: StakeLedger, validator_id: int, reward: int) -> StakeLedger:
    return ledger.reward(validator_id, reward)


def _richest(stakes: dict[int, int]) -> tuple[int, int]:
    # Largest stake wins; equal stakes go to the smallest id.
    best_id, best_stake = None, -1
    for nft_id, stake in stakes.items():
        if stake > best_stake or (stake == best_stake and nft_id < best_id):
            best_id, best_stake = nft_id, stake
    return best_id, best_stake


def elect_validator(ledger: StakeLedger, round: int = 0) -> ElectionResult:
    """Pick the id holding the most stake. The round number does not affect the outcome."""
    if ledger.total <= 0:
        raise NoStake("cannot elect a validator from an empty ledger")
    nft_id, stake = _richest(ledger.stakes)
    return ElectionResult(round, nft_id, stake, Fraction(stake, ledger.total))


def _as_fraction(x) -> Fraction:
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(str(x))


def majority_stake_holder(ledger: StakeLedger, threshold=MAJORITY_THRESHOLD) -> Optional[tuple[int, Fraction]]:
    """Return (id, fraction) for the holder whose share is strictly above ``threshold``."""
    if ledger.total <= 0:
        raise NoStake("ledger holds no stake")
    limit = _as_fraction(threshold)
    nft_id, stake = _richest(ledger.stakes)
    share = Fraction(stake, ledger.total)
    if share > limit:
        return nft_id, share
    return None
