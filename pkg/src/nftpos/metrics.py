"""Windowed throughput (TPS) statistics and CSV rendering.

Everything is kept as exact ``Fraction`` values; rounding happens only when a
report is rendered to CSV (6 decimals, round-half-even).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

from .errors import BadWindow, ZeroDuration

CSV_HEADER = "label,window_index,tps,mean_tps,stddev_tps,cv_tps"
_SQRT_DIGITS = 18


@dataclass(frozen=True)
class MetricsReport:
    window_s: int
    window_counts: tuple[int, ...]
    per_window_tps: tuple[Fraction, ...]
    mean_tps: Fraction
    stddev_tps: Fraction
    cv_tps: Fraction
    total_validated: int


def _rational(x) -> Fraction:
    if isinstance(x, Rational):
        return Fraction(x)
    return Fraction(str(x))


def throughput(sum_of_transactions: int, delta_t_s) -> Fraction:
    """Transactions per second over an interval of ``delta_t_s`` seconds."""
    dt = _rational(delta_t_s)
    if dt <= 0:
        raise ZeroDuration(f"interval must be positive, got {delta_t_s}")
    return Fraction(sum_of_transactions) / dt


def _sqrt(x: Fraction) -> Fraction:
    """Square root, exact for rational squares, else floored at 1e-18."""
    if x <= 0:
        return Fraction(0)
    rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    scale = 10**_SQRT_DIGITS
    return Fraction(math.isqrt(x.numerator * scale * scale // x.denominator), scale)


def report_from_counts(counts: Sequence[int], window_s: int) -> MetricsReport:
    tps = tuple(throughput(c, window_s) for c in counts)
    n = len(tps)
    if n:
        mean = sum(tps, Fraction(0)) / n
        var = sum(((t - mean) ** 2 for t in tps), Fraction(0)) / n
    else:
        mean = var = Fraction(0)
    std = _sqrt(var)
    cv = std / mean if mean else Fraction(0)
    return MetricsReport(window_s, tuple(counts), tps, mean, std, cv, sum(counts))


def window_index(timestamp_ms: int, window_ms: int) -> int:
    """Windows are (k*W, (k+1)*W]; time 0 belongs to the first window."""
    return max(timestamp_ms - 1, 0) // window_ms


def windowed_report(chain, window_s: int, duration_s: int) -> MetricsReport:
    if window_s <= 0 or duration_s <= 0 or duration_s % window_s:
        raise BadWindow(f"duration {duration_s}s must be a positive multiple of window {window_s}s")
    window_ms = window_s * 1000
    counts = [0] * (duration_s // window_s)
    for block in chain.blocks:
        h = block.header
        if not h.tx_count:
            continue
        k = window_index(h.timestamp_ms, window_ms)
        if k >= len(counts):
            raise BadWindow(f"block at height {h.height} ({h.timestamp_ms} ms) lies past the {duration_s}s horizon")
        counts[k] += h.tx_count
    return report_from_counts(counts, window_s)


def format_fixed(x: Fraction, places: int = 6) -> str:
    """Render a rational at fixed decimal places, rounding half to even."""
    scaled = round(Fraction(x) * 10**places)
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def emit_csv(report: MetricsReport, label: str, header: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_HEADER.split(","))
    stats = [format_fixed(report.mean_tps), format_fixed(report.stddev_tps), format_fixed(report.cv_tps)]
    for i, tps in enumerate(report.per_window_tps):
        writer.writerow([label, i, format_fixed(tps), *stats])
    return buf.getvalue()
