import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from helpers import registry_with
from nftpos.chain import append_block, new_chain
from nftpos.errors import BadWindow, ZeroDuration
from nftpos.metrics import (
    CSV_HEADER,
    emit_csv,
    format_fixed,
    report_from_counts,
    throughput,
    windowed_report,
)
from nftpos.txpool import Mempool, create_transaction


def chain_with(blocks):
    """blocks: list of (timestamp_ms, tx_count)."""
    reg, _, sessions = registry_with(1)
    pool = Mempool()
    chain = new_chain()
    for t, n in blocks:
        txs = [create_transaction(sessions[0], reg, b"", pool, t)[1] for _ in range(n)]
        chain = append_block(chain, txs, 1, t)
    return chain


def rescan_counts(chain, window_s, duration_s):
    """Oracle: for every window, walk every block and test membership directly."""
    w_ms = window_s * 1000
    counts = []
    for w in range(duration_s // window_s):
        lo, hi = w * w_ms, (w + 1) * w_ms
        total = 0
        for block in chain.blocks:
            t = block.header.timestamp_ms
            if lo < t <= hi or (w == 0 and t == 0):
                total += block.header.tx_count
        counts.append(total)
    return counts


def test_throughput_examples():
    assert throughput(3000, 60) == 50
    assert throughput(0, 60) == 0
    assert throughput(7, 3) == Fraction(7, 3)
    assert format_fixed(throughput(7, 3)) == "2.333333"
    assert throughput(10, Fraction(1, 2)) == 20
    assert throughput(1, 0.5) == 2


def test_throughput_zero_duration():
    with pytest.raises(ZeroDuration):
        throughput(5, 0)
    with pytest.raises(ZeroDuration):
        throughput(5, -1)


def test_single_window_uniform():
    chain = chain_with([(k * 1000, 10) for k in range(1, 61)])
    report = windowed_report(chain, 60, 60)
    assert report.per_window_tps == (10,)
    assert report.cv_tps == 0
    assert report.total_validated == 600


def test_two_window_population_stats():
    chain = chain_with([(30_000, 600)])
    report = windowed_report(chain, 60, 120)
    assert report.per_window_tps == (10, 0)
    assert report.mean_tps == 5
    assert report.stddev_tps == 5
    assert report.cv_tps == 1


def test_block_on_window_edge_belongs_to_earlier_window():
    chain = chain_with([(60_000, 3), (60_001, 4)])
    assert windowed_report(chain, 60, 120).window_counts == (3, 4)


def test_bad_window():
    chain = chain_with([])
    with pytest.raises(BadWindow):
        windowed_report(chain, 60, 90)
    with pytest.raises(BadWindow):
        windowed_report(chain, 0, 60)
    with pytest.raises(BadWindow):
        windowed_report(chain_with([(61_000, 1)]), 60, 60)


def test_idle_run_has_zero_cv():
    report = windowed_report(chain_with([(1000, 0), (2000, 0)]), 60, 120)
    assert report.per_window_tps == (0, 0)
    assert report.cv_tps == 0


def test_window_totals_match_rescan_on_random_chains():
    rng = random.Random(21)
    for _ in range(60):
        window_s = rng.choice([1, 5, 10, 60])
        duration_s = window_s * rng.randint(1, 6)
        t, blocks = 0, []
        for _ in range(rng.randint(0, 25)):
            t = min(t + rng.randint(0, duration_s * 200), duration_s * 1000)
            blocks.append((t, rng.randint(0, 4)))
        chain = chain_with(blocks)
        report = windowed_report(chain, window_s, duration_s)
        assert list(report.window_counts) == rescan_counts(chain, window_s, duration_s)
        assert report.total_validated == sum(b.header.tx_count for b in chain.blocks)
        for tps, count in zip(report.per_window_tps, report.window_counts):
            assert tps * window_s == count


@given(st.lists(st.integers(0, 10**6), max_size=30), st.integers(1, 600))
def test_stats_recompute_from_tps(counts, window_s):
    report = report_from_counts(counts, window_s)
    n = len(counts)
    if n:
        mean = sum(report.per_window_tps, Fraction(0)) / n
        var = sum((t - mean) ** 2 for t in report.per_window_tps) / n
        assert report.mean_tps == mean
        assert abs(report.stddev_tps ** 2 - var) <= 2 * report.stddev_tps * Fraction(1, 10**18) + Fraction(1, 10**30)
    assert report.total_validated == sum(counts)


@pytest.mark.parametrize("value,text", [
    (Fraction(5, 10**7), "0.000000"),
    (Fraction(15, 10**7), "0.000002"),
    (Fraction(25, 10**7), "0.000002"),
    (Fraction(-7, 3), "-2.333333"),
    (Fraction(50), "50.000000"),
    (Fraction(2, 3), "0.666667"),
])
def test_format_fixed_rounds_half_even(value, text):
    assert format_fixed(value) == text


def test_emit_csv():
    report = report_from_counts([600], 60)
    text = emit_csv(report, "PoS")
    assert text == f"{CSV_HEADER}\nPoS,0,10.000000,10.000000,0.000000,0.000000\n"
    assert emit_csv(report, "PoS") == text
    assert emit_csv(report_from_counts([], 60), "x") == CSV_HEADER + "\n"


def test_emit_csv_two_windows():
    text = emit_csv(report_from_counts([600, 0], 60), "run")
    assert text.splitlines()[1:] == [
        "run,0,10.000000,5.000000,5.000000,1.000000",
        "run,1,0.000000,5.000000,5.000000,1.000000",
    ]
