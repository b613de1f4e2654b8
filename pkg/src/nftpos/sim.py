"""Seeded discrete-event simulation of users, arrivals and block production.

A run mints ``num_users`` identities, gives them their initial stake, logs
each of them in at t=0 and then replays a single ordered event queue:

* ``TX_ARRIVAL``: a user creates an authenticated transaction (mempool).
* ``ROUND_BOUNDARY``: PoS round every ``block_interval_ms``. The richest
  stakeholder is elected, drains the mempool into a block and is rewarded.
* ``POW_SOLVED``: baseline producer. A Bernoulli trial runs every 10 ms of
  simulated time and the first success produces a block, so block gaps are
  geometric.

Arrivals and PoW trials draw from separate RNG streams derived from the
seed, so both consensus modes see the same offered load for a given seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import heapq
import json
import random
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from pathlib import Path
from typing import Any, NamedTuple, Optional, Sequence

from .chain import Chain, make_block, make_genesis, hash_header, verify_chain
from .errors import ConfigInvalid, UnknownAxis
from .identity import IdentityRegistry
from .metrics import MetricsReport, windowed_report
from .stake import ElectionResult, StakeLedger, elect_validator, majority_stake_holder
from .txpool import Mempool, create_transaction, validate_tx

POW_TRIAL_MS = 10
MAX_SEED = 2**64 - 1
CONSENSUS_MODES = ("PoS", "PowBaseline")
ARRIVAL_MODES = ("poisson", "fixed")
ELECTION_MODES = ("argmax",)
STAKE_KINDS = ("uniform", "linear", "one_whale")
SWEEP_AXES = ("tx_rate_per_sec", "num_users", "max_txs_per_block")


@dataclass(frozen=True)
class StakeSpec:
    """How initial stake is handed out.

    ``uniform``: every user gets ``amount``. ``linear``: user i gets ``base * i``.
    ``one_whale``: user 1 holds ``whale_fraction`` of ``total`` units and the
    rest is split evenly over the others.
    """

    kind: str = "uniform"
    amount: int = 100
    base: int = 10
    whale_fraction: float = 0.52
    total: int = 10_000

    def allocate(self, num_users: int) -> list[int]:
        if self.kind == "uniform":
            return [self.amount] * num_users
        if self.kind == "linear":
            return [self.base * (i + 1) for i in range(num_users)]
        if num_users == 1:
            return [self.total]
        whale = int(Fraction(str(self.whale_fraction)) * self.total)
        rest, others = self.total - whale, num_users - 1
        share, extra = divmod(rest, others)
        return [whale] + [share + (1 if i < extra else 0) for i in range(others)]


_STAKE_FIELDS = {f.name for f in dataclasses.fields(StakeSpec)}


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    num_users: int = 10
    initial_stakes: StakeSpec = field(default_factory=StakeSpec)
    tx_rate_per_sec: float = 10.0
    block_interval_ms: int = 1000
    max_txs_per_block: int = 1000
    duration_s: int = 60
    window_s: int = 60
    consensus_mode: str = "PoS"
    pow_success_prob: float = 0.01
    reward_per_block: int = 1
    arrival_mode: str = "poisson"
    delivery_delay_ms: int = 0
    election_mode: str = "argmax"

    @property
    def capacity_tps(self) -> Fraction:
        return Fraction(self.max_txs_per_block * 1000, self.block_interval_ms)

    def validate(self) -> "SimConfig":
        def need_int(name, lo=None, hi=None):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigInvalid(name, f"expected an integer, got {v!r}")
            if lo is not None and v < lo:
                raise ConfigInvalid(name, f"must be >= {lo}, got {v}")
            if hi is not None and v > hi:
                raise ConfigInvalid(name, f"must be <= {hi}, got {v}")

        def need_number(name):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
                raise ConfigInvalid(name, f"expected a number, got {v!r}")
            return v

        def need_choice(name, choices):
            v = getattr(self, name)
            if v not in choices:
                raise ConfigInvalid(name, f"must be one of {', '.join(choices)}; got {v!r}")

        need_int("seed", 0, MAX_SEED)
        need_int("num_users", 1)
        if not need_number("tx_rate_per_sec") > 0:
            raise ConfigInvalid("tx_rate_per_sec", f"must be positive, got {self.tx_rate_per_sec}")
        need_int("block_interval_ms", 1)
        need_int("max_txs_per_block", 1)
        need_int("duration_s", 1)
        need_int("window_s", 1)
        if self.duration_s % self.window_s:
            raise ConfigInvalid("window_s", f"duration_s {self.duration_s} is not a multiple of window_s {self.window_s}")
        need_choice("consensus_mode", CONSENSUS_MODES)
        p = need_number("pow_success_prob")
        if not 0 < p <= 1:
            raise ConfigInvalid("pow_success_prob", f"must lie in (0, 1], got {p}")
        need_int("reward_per_block", 0)
        need_choice("arrival_mode", ARRIVAL_MODES)
        need_int("delivery_delay_ms", 0)
        need_choice("election_mode", ELECTION_MODES)
        self._validate_stakes()
        return self

    def _validate_stakes(self) -> None:
        spec = self.initial_stakes
        if not isinstance(spec, StakeSpec):
            raise ConfigInvalid("initial_stakes", "expected a stake distribution")
        if spec.kind not in STAKE_KINDS:
            raise ConfigInvalid("initial_stakes.kind", f"must be one of {', '.join(STAKE_KINDS)}; got {spec.kind!r}")
        for name in ("amount", "base", "total"):
            v = getattr(spec, name)
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise ConfigInvalid(f"initial_stakes.{name}", f"must be a positive integer, got {v!r}")
        wf = spec.whale_fraction
        if isinstance(wf, bool) or not isinstance(wf, (int, float)) or not 0 < wf <= 1:
            raise ConfigInvalid("initial_stakes.whale_fraction", f"must lie in (0, 1], got {wf!r}")
        if spec.kind == "one_whale" and int(Fraction(str(wf)) * spec.total) == 0:
            raise ConfigInvalid("initial_stakes.whale_fraction", "whale would receive no stake")
        if sum(spec.allocate(self.num_users)) > 2**64 - 1:
            raise ConfigInvalid("initial_stakes", "total stake exceeds the 64-bit range")

    # JSON round trip --------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid("<root>", "config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigInvalid(key, "unknown field")
        kwargs = dict(data)
        stakes = kwargs.get("initial_stakes")
        if stakes is not None:
            if not isinstance(stakes, dict):
                raise ConfigInvalid("initial_stakes", "expected an object")
            for key in stakes:
                if key not in _STAKE_FIELDS:
                    raise ConfigInvalid(f"initial_stakes.{key}", "unknown field")
            kwargs["initial_stakes"] = StakeSpec(**stakes)
        return cls(**kwargs).validate()

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid("<root>", f"not valid JSON: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "SimConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


class EventKind(IntEnum):
    # Value order is the tie-break order for events at the same instant.
    TX_ARRIVAL = 0
    ROUND_BOUNDARY = 1
    POW_SOLVED = 2


class SimEvent(NamedTuple):
    at_ms: int
    kind: EventKind
    seq: int
    sender: int = -1


@dataclass(frozen=True)
class EventCounts:
    created: int
    validated: int
    dropped: int
    pooled: int


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    chain: Chain
    metrics: MetricsReport
    counts: EventCounts
    initial_stakes: tuple[tuple[int, int], ...]
    stake_snapshots: tuple[tuple[tuple[int, int], ...], ...]
    elections: tuple[ElectionResult, ...]
    majority_alerts: tuple[tuple[int, int, Fraction], ...]
    registry: IdentityRegistry
    ledger: StakeLedger


def _stream(seed: int, name: str) -> random.Random:
    digest = hashlib.sha256(name.encode() + struct.pack(">Q", seed)).digest()
    return random.Random(int.from_bytes(digest, "big"))


def user_secret(seed: int, index: int) -> bytes:
    return hashlib.sha256(b"user-secret" + struct.pack(">QQ", seed, index)).digest()


class _Arrivals:
    """Yields (at_ms, sender_index) pairs in time order up to the horizon."""

    def __init__(self, cfg: SimConfig):
        self.rng = _stream(cfg.seed, "arrivals")
        self.cfg = cfg
        self.horizon_ms = cfg.duration_s * 1000
        self.k = 0
        self.t = 0.0
        self.rate = float(cfg.tx_rate_per_sec)
        self.period_ms = Fraction(1000) / Fraction(str(cfg.tx_rate_per_sec))

    def next(self) -> Optional[tuple[int, int]]:
        self.k += 1
        if self.cfg.arrival_mode == "fixed":
            at_ms = int(self.k * self.period_ms)
            sender = (self.k - 1) % self.cfg.num_users
        else:
            self.t += self.rng.expovariate(self.rate)
            at_ms = int(self.t * 1000)
            sender = self.rng.randrange(self.cfg.num_users)
        if at_ms > self.horizon_ms:
            return None
        return at_ms, sender


class _PowClock:
    """Bernoulli trial every 10 ms; returns the next success time and miner."""

    def __init__(self, cfg: SimConfig):
        self.rng = _stream(cfg.seed, "pow")
        self.p = float(cfg.pow_success_prob)
        self.num_users = cfg.num_users
        self.horizon_ms = cfg.duration_s * 1000
        self.trial = 0

    def next(self) -> Optional[tuple[int, int]]:
        rng, p = self.rng, self.p
        last = self.horizon_ms // POW_TRIAL_MS
        while self.trial < last:
            self.trial += 1
            if rng.random() < p:
                return self.trial * POW_TRIAL_MS, rng.randrange(self.num_users) + 1
        return None


def run_simulation(cfg: SimConfig) -> SimResult:
    cfg.validate()
    horizon_ms = cfg.duration_s * 1000
    window_ms = cfg.window_s * 1000

    registry = IdentityRegistry()
    sessions = []
    for i in range(cfg.num_users):
        secret = user_secret(cfg.seed, i)
        ident = registry.mint(f"user-{i + 1}", secret)
        sessions.append(registry.authenticate(ident.nft_id, secret, 0))

    ledger = StakeLedger(registry)
    for session, amount in zip(sessions, cfg.initial_stakes.allocate(cfg.num_users)):
        if amount > 0:
            ledger.record(session.nft_id, amount)
    initial = ledger.snapshot()

    pool = Mempool()
    blocks = [make_genesis()]
    elections: list[ElectionResult] = []
    alerts = []
    snapshots = []
    created = validated = dropped = 0
    seq = 0
    queue: list[SimEvent] = []

    arrivals = _Arrivals(cfg)

    def push_arrival():
        nonlocal seq
        nxt = arrivals.next()
        if nxt is not None:
            seq += 1
            heapq.heappush(queue, SimEvent(nxt[0], EventKind.TX_ARRIVAL, seq, nxt[1]))

    push_arrival()
    pow_clock = None
    if cfg.consensus_mode == "PoS":
        if cfg.block_interval_ms <= horizon_ms:
            seq += 1
            heapq.heappush(queue, SimEvent(cfg.block_interval_ms, EventKind.ROUND_BOUNDARY, seq))
    else:
        pow_clock = _PowClock(cfg)
        solved = pow_clock.next()
        if solved is not None:
            seq += 1
            heapq.heappush(queue, SimEvent(solved[0], EventKind.POW_SOLVED, seq, solved[1]))

    def produce(at_ms: int, producer: int) -> None:
        nonlocal validated, dropped
        batch = pool.drain(cfg.max_txs_per_block, at_ms - cfg.delivery_delay_ms)
        good = []
        for tx in batch:
            if validate_tx(tx, registry):
                good.append(tx)
            else:
                dropped += 1
        blocks.append(make_block(blocks[-1].header, good, producer, at_ms, cfg.max_txs_per_block))
        validated += len(good)
        ledger.reward(producer, cfg.reward_per_block)

    next_window_end = window_ms
    round_no = 0
    while queue:
        ev = heapq.heappop(queue)
        while ev.at_ms > next_window_end:
            snapshots.append(ledger.snapshot())
            next_window_end += window_ms

        if ev.kind is EventKind.TX_ARRIVAL:
            seq_payload = struct.pack(">Q", created)
            create_transaction(sessions[ev.sender], registry, seq_payload, pool, ev.at_ms)
            created += 1
            push_arrival()

        elif ev.kind is EventKind.ROUND_BOUNDARY:
            alert = majority_stake_holder(ledger)
            if alert is not None:
                alerts.append((round_no, alert[0], alert[1]))
            election = elect_validator(ledger, round_no)
            elections.append(election)
            produce(ev.at_ms, election.validator_id)
            round_no += 1
            nxt = ev.at_ms + cfg.block_interval_ms
            if nxt <= horizon_ms:
                seq += 1
                heapq.heappush(queue, SimEvent(nxt, EventKind.ROUND_BOUNDARY, seq))

        else:
            produce(ev.at_ms, ev.sender)
            solved = pow_clock.next()
            if solved is not None:
                seq += 1
                heapq.heappush(queue, SimEvent(solved[0], EventKind.POW_SOLVED, seq, solved[1]))

    while next_window_end <= horizon_ms:
        snapshots.append(ledger.snapshot())
        next_window_end += window_ms

    chain = Chain(tuple(blocks), hash_header(blocks[-1].header))
    report = verify_chain(chain)
    if not report.ok:
        raise RuntimeError(f"simulation produced an invalid chain: {report.describe()}")

    return SimResult(
        config=cfg,
        chain=chain,
        metrics=windowed_report(chain, cfg.window_s, cfg.duration_s),
        counts=EventCounts(created, validated, dropped, len(pool)),
        initial_stakes=initial,
        stake_snapshots=tuple(snapshots),
        elections=tuple(elections),
        majority_alerts=tuple(alerts),
        registry=registry,
        ledger=ledger,
    )


def _sweep_point(cfg: SimConfig) -> MetricsReport:
    return run_simulation(cfg).metrics


def sweep_configs(base: SimConfig, axis: str, values: Sequence) -> list[SimConfig]:
    if axis not in SWEEP_AXES:
        raise UnknownAxis(axis)
    if not values:
        raise ConfigInvalid("values", "sweep needs at least one value")
    cfgs = [dataclasses.replace(base, **{axis: v, "seed": (base.seed + i) % (MAX_SEED + 1)}) for i, v in enumerate(values)]
    for cfg in cfgs:
        cfg.validate()
    return cfgs


def run_sweep(base: SimConfig, axis: str, values: Sequence, workers: int = 1) -> list[tuple[Any, MetricsReport]]:
    """One independent run per value; run i uses seed ``base.seed + i``."""
    cfgs = sweep_configs(base, axis, values)
    if workers > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(_sweep_point, cfgs))
    else:
        reports = [_sweep_point(cfg) for cfg in cfgs]
    return list(zip(values, reports))
