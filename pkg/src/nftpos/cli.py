"""Command-line entry point.

Exit codes: 0 ok, 1 invalid config or arguments, 2 I/O failure, 3 chain
verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from fractions import Fraction
from pathlib import Path

from .errors import ConfigInvalid, IoFailure, PersistenceError
from .metrics import CSV_HEADER, emit_csv, format_fixed
from .persistence import load_chain, store_chain, store_snapshot
from .sim import SWEEP_AXES, SimConfig, run_simulation, run_sweep
from .stake import MAJORITY_THRESHOLD

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_VERIFY = 3


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    return SimConfig.from_json(text)


def _write_text(path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _summary(prefix: str, metrics, counts=None) -> str:
    parts = [prefix] if prefix else []
    if counts is not None:
        parts.append(f"created={counts.created} validated={counts.validated} "
                     f"dropped={counts.dropped} pooled={counts.pooled}")
    else:
        parts.append(f"validated={metrics.total_validated}")
    parts.append(f"mean_tps={format_fixed(metrics.mean_tps)} cv_tps={format_fixed(metrics.cv_tps)}")
    return " ".join(parts)


def cmd_run(config_path, out_csv, out_chain) -> int:
    try:
        cfg = _load_config(config_path)
        result = run_simulation(cfg)
        _write_text(out_csv, emit_csv(result.metrics, cfg.consensus_mode))
        store_chain(result.chain, out_chain)
        store_snapshot(result.registry, result.ledger, f"{out_chain}.state")
    except ConfigInvalid as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except IoFailure as exc:
        _err(str(exc))
        return EXIT_IO
    print(_summary(f"mode={cfg.consensus_mode} blocks={len(result.chain) - 1}", result.metrics, result.counts))
    return EXIT_OK


def _parse_values(axis: str, raw: str) -> list:
    out = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            if axis == "tx_rate_per_sec":
                value = float(token)
                out.append(int(value) if value.is_integer() and "." not in token else value)
            else:
                out.append(int(token))
        except ValueError:
            raise ConfigInvalid("values", f"cannot parse {token!r} for axis {axis}") from None
    return out


def cmd_sweep(config_path, axis, values, out_csv, workers: int = 1) -> int:
    try:
        cfg = _load_config(config_path)
        if axis not in SWEEP_AXES:
            raise ConfigInvalid("axis", f"unknown axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
        parsed = _parse_values(axis, values) if isinstance(values, str) else list(values)
        points = run_sweep(cfg, axis, parsed, workers=workers)
        chunks = [CSV_HEADER + "\n"]
        for value, report in points:
            chunks.append(emit_csv(report, f"{axis}={value}", header=False))
        _write_text(out_csv, "".join(chunks))
    except ConfigInvalid as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except IoFailure as exc:
        _err(str(exc))
        return EXIT_IO
    for value, report in points:
        print(_summary(f"{axis}={value}", report))
    return EXIT_OK


def _open_chain(chain_path):
    try:
        return load_chain(chain_path), None
    except IoFailure as exc:
        _err(str(exc))
        return None, EXIT_IO
    except PersistenceError as exc:
        print(f"verification failed: {exc}")
        return None, EXIT_VERIFY


def cmd_verify(chain_path) -> int:
    chain, code = _open_chain(chain_path)
    if chain is None:
        return code
    print(f"ok blocks={len(chain)} tip_height={chain.tip.height} head={chain.head.hex()}")
    return EXIT_OK


def cmd_inspect(chain_path) -> int:
    chain, code = _open_chain(chain_path)
    if chain is None:
        return code
    print("height,timestamp_ms,validator_id,tx_count,prev_hash")
    for block in chain:
        h = block.header
        print(f"{h.height},{h.timestamp_ms},{h.validator_id},{h.tx_count},{h.prev_hash.hex()[:16]}")
    total = sum(b.header.tx_count for b in chain)
    print(f"blocks={len(chain)} transactions={total} head={chain.head.hex()}")
    return EXIT_OK


def cmd_demo_51(config_path) -> int:
    try:
        cfg = dataclasses.replace(_load_config(config_path), consensus_mode="PoS").validate()
        result = run_simulation(cfg)
    except ConfigInvalid as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except IoFailure as exc:
        _err(str(exc))
        return EXIT_IO

    initial = dict(result.initial_stakes)
    total0 = sum(initial.values())
    # Largest initial holder; equal stakes resolve to the smallest id, as in the election.
    top = min(initial, key=lambda i: (-initial[i], i))
    print("51% stake concentration demo (illustrative; no attack is simulated)")
    print(f"stakes={cfg.initial_stakes.kind} users={cfg.num_users} rounds={len(result.elections)}")
    print(f"top_staker={top} initial_fraction={format_fixed(Fraction(initial[top], total0))}")

    if result.majority_alerts:
        rnd, holder, share = result.majority_alerts[0]
        print(f"detector=fired first_round={rnd} holder={holder} fraction={format_fixed(share)} "
              f"threshold={format_fixed(MAJORITY_THRESHOLD)} alert_rounds={len(result.majority_alerts)}")
    else:
        print(f"detector=silent threshold={format_fixed(MAJORITY_THRESHOLD)}")

    for k, snap in enumerate(result.stake_snapshots):
        stakes = dict(snap)
        share = Fraction(stakes.get(top, 0), sum(stakes.values()))
        print(f"window={k} top_staker_fraction={format_fixed(share)}")

    produced = len(result.chain) - 1
    by_top = sum(1 for b in result.chain.blocks[1:] if b.header.validator_id == top)
    share = Fraction(by_top, produced) if produced else Fraction(0)
    print(f"blocks_validated_by_top_staker={by_top}/{produced} share={format_fixed(share)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nftpos", description="NFT identity + proof-of-stake chain simulator")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run one simulation, write TPS CSV and the chain file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--chain", required=True, help="chain file output path")

    sweep = sub.add_parser("sweep", help="run one simulation per value of a config field")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--axis", required=True, help=f"one of {', '.join(SWEEP_AXES)}")
    sweep.add_argument("--values", required=True, help="comma-separated list")
    sweep.add_argument("--out", required=True, help="CSV output path")
    sweep.add_argument("--workers", type=int, default=1, help="parallel worker processes")

    verify = sub.add_parser("verify", help="load a chain file and verify every block")
    verify.add_argument("--chain", required=True)

    inspect = sub.add_parser("inspect", help="print a verified chain block by block")
    inspect.add_argument("--chain", required=True)

    demo = sub.add_parser(
        "demo-51",
        help="illustrative: show how richest-stakeholder election concentrates validation",
    )
    demo.add_argument("--config", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.verb == "run":
        return cmd_run(args.config, args.out, args.chain)
    if args.verb == "sweep":
        return cmd_sweep(args.config, args.axis, args.values, args.out, args.workers)
    if args.verb == "verify":
        return cmd_verify(args.chain)
    if args.verb == "inspect":
        return cmd_inspect(args.chain)
    return cmd_demo_51(args.config)


if __name__ == "__main__":
    sys.exit(main())
