"""Metric rankings, h-versus-o comparison and figure-data tables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import IO, Sequence

from .errors import MismatchedSets
from .metrics import MetricSummary

__all__ = [
    "METRICS",
    "RankEntry",
    "RankingTable",
    "RankComparison",
    "rank_by",
    "compare_rankings",
    "kendall_tau_a",
    "emit_fig1_data",
    "emit_fig2_data",
    "format_number",
]

METRICS = {
    "h": "h_index",
    "o": "o_index",
    "C": "total_citations",
    "m": "max_citations",
    "mean_c": "mean_citations",
}


@dataclass(frozen=True)
class RankEntry:
    rank: int
    researcher_id: str
    value: float


@dataclass(frozen=True)
class RankingTable:
    metric: str
    entries: tuple[RankEntry, ...]

    def __len__(self):
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.researcher_id for e in self.entries]

    def rank_of(self) -> dict[str, int]:
        return {e.researcher_id: e.rank for e in self.entries}


@dataclass(frozen=True)
class RankComparison:
    """``displacements`` maps id to ``rank_in_a - rank_in_b``, listed in table-b order.

    ``kendall_tau`` is NaN when fewer than two researchers are ranked.
    """

    kendall_tau: float
    displacements: dict[str, int]

    def largest_moves(self, k: int = 10) -> list[tuple[str, int]]:
        moves = sorted(self.displacements.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
        return moves[:k]


def rank_by(summaries: Sequence[MetricSummary], metric: str) -> RankingTable:
    """Order researchers by ``metric``, largest first.

    Ties fall back to higher C, then higher m, then the id in lexicographic
    order, so the ranking is total and ranks run 1..n without gaps.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    ids = [s.researcher_id for s in summaries]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate researcher ids in ranking input")
    attr = METRICS[metric]
    ordered = sorted(
        summaries,
        key=lambda s: (-getattr(s, attr), -s.total_citations, -s.max_citations, s.researcher_id),
    )
    entries = tuple(
        RankEntry(i, s.researcher_id, float(getattr(s, attr))) for i, s in enumerate(ordered, 1)
    )
    return RankingTable(metric, entries)


def _count_inversions(seq: list[int]) -> int:
    # bottom-up merge sort
    a = list(seq)
    n = len(a)
    inv = 0
    width = 1
    buf = [0] * n
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[i] <= a[j]:
                    buf[k] = a[i]
                    i += 1
                else:
                    buf[k] = a[j]
                    inv += mid - i
                    j += 1
                k += 1
            buf[k:k + mid - i] = a[i:mid]
            k += mid - i
            buf[k:k + hi - j] = a[j:hi]
        a, buf = buf, a
        width *= 2
    return inv


def kendall_tau_a(order_a: Sequence[str], order_b: Sequence[str]) -> float:
    """Kendall tau-a between two total orders of the same items (no tie correction)."""
    n = len(order_a)
    if n < 2:
        return math.nan
    pos_b = {rid: i for i, rid in enumerate(order_b)}
    discordant = _count_inversions([pos_b[rid] for rid in order_a])
    pairs = n * (n - 1) // 2
    return (pairs - 2 * discordant) / pairs


def compare_rankings(a: RankingTable, b: RankingTable) -> RankComparison:
    ranks_a, ranks_b = a.rank_of(), b.rank_of()
    mismatch = set(ranks_a) ^ set(ranks_b)
    if mismatch:
        raise MismatchedSets(mismatch)
    tau = kendall_tau_a(a.ids, b.ids)
    return RankComparison(tau, {rid: ranks_a[rid] - ranks_b[rid] for rid in b.ids})


def format_number(x) -> str:
    """Shortest decimal that round-trips; integral ints stay integral."""
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def emit_fig1_data(summaries: Sequence[MetricSummary], stream: IO[str]) -> int:
    """Write ``id,sqrt_C,h_ratio,mean_c`` rows (C > 0 only), sorted by sqrt_C.

    Returns the number of data rows written.
    """
    rows = sorted(
        (s for s in summaries if s.total_citations > 0),
        key=lambda s: (s.total_citations, s.researcher_id),
    )
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["id", "sqrt_C", "h_ratio", "mean_c"])
    for s in rows:
        writer.writerow([s.researcher_id, format_number(math.sqrt(s.total_citations)),
                         format_number(s.h_ratio), format_number(s.mean_citations)])
    return len(rows)


def emit_fig2_data(summaries: Sequence[MetricSummary], stream: IO[str]) -> int:
    """Write ``id,h,o`` rows for every researcher, sorted by h ascending."""
    rows = sorted(summaries, key=lambda s: (s.h_index, s.o_index, s.researcher_id))
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["id", "h", "o"])
    for s in rows:
        writer.writerow([s.researcher_id, s.h_index, format_number(s.o_index)])
    return len(rows)


def write_ranking(table: RankingTable, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["rank", "id", table.metric])
    for e in table.entries:
        writer.writerow([e.rank, e.researcher_id, format_number(e.value)])
