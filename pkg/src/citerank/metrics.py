"""Per-researcher citation metrics: h-index, o-index and the summary scalars.

A researcher is described by the citation counts of their papers ranked in
descending order, ``c_1 >= c_2 >= ... >= c_N``. Everything here is a pure
function of that ranked list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import NegativeCount

__all__ = [
    "CitationRecord",
    "MetricSummary",
    "normalize_record",
    "h_index",
    "o_index",
    "summarize",
    "summarize_all",
    "round_half_up",
]


@dataclass(frozen=True, eq=False)
class CitationRecord:
    """Ranked citation counts of one researcher.

    ``counts`` is stored as a read-only ``int64`` array sorted in descending
    order. Build records with :func:`normalize_record` unless the counts are
    already ranked; the constructor validates but does not sort.
    """

    researcher_id: str
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64).reshape(-1)
        if counts.size:
            bad = np.flatnonzero(counts < 0)
            if bad.size:
                raise NegativeCount(int(bad[0]))
            if np.any(counts[1:] > counts[:-1]):
                raise ValueError("counts must be sorted in descending order")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_papers(self) -> int:
        return int(self.counts.size)

    def __len__(self):
        return self.n_papers

    def __eq__(self, other):
        if not isinstance(other, CitationRecord):
            return NotImplemented
        return self.researcher_id == other.researcher_id and np.array_equal(
            self.counts, other.counts
        )

    def __hash__(self):
        return hash((self.researcher_id, self.counts.tobytes()))

    def __repr__(self):
        shown = self.counts[:8].tolist()
        tail = ", ..." if self.counts.size > 8 else ""
        return f"CitationRecord({self.researcher_id!r}, {shown}{tail}, N={self.n_papers})"


@dataclass(frozen=True)
class MetricSummary:
    researcher_id: str
    n_papers: int
    total_citations: int
    max_citations: int
    mean_citations: float
    h_index: int
    o_index: float
    h_ratio: float

    # short aliases matching the usual notation
    @property
    def N(self) -> int:
        return self.n_papers

    @property
    def C(self) -> int:
        return self.total_citations

    @property
    def m(self) -> int:
        return self.max_citations

    @property
    def h(self) -> int:
        return self.h_index

    @property
    def o(self) -> float:
        return self.o_index

    @property
    def mean_c(self) -> float:
        return self.mean_citations

    def as_dict(self) -> dict:
        return {
            "id": self.researcher_id,
            "N": self.n_papers,
            "C": self.total_citations,
            "m": self.max_citations,
            "mean_c": self.mean_citations,
            "h": self.h_index,
            "o": self.o_index,
            "h_ratio": self.h_ratio,
        }


def normalize_record(researcher_id: str, raw_counts: Iterable[int]) -> CitationRecord:
    """Return a record with ``raw_counts`` ranked in descending order.

    Raises :class:`NegativeCount` carrying the offending index of the raw input.
    """
    counts = np.asarray(
        raw_counts if isinstance(raw_counts, np.ndarray) else list(raw_counts)
    )
    if counts.size and not np.issubdtype(counts.dtype, np.integer):
        if not np.all(np.mod(counts, 1) == 0):
            raise ValueError("citation counts must be integers")
    counts = counts.astype(np.int64, copy=False).reshape(-1)
    bad = np.flatnonzero(counts < 0)
    if bad.size:
        raise NegativeCount(int(bad[0]))
    return CitationRecord(researcher_id, np.sort(counts)[::-1])


def h_index(record: CitationRecord) -> int:
    """Largest rank ``r`` with ``c_r >= r``; 0 when no paper qualifies.

    ``c_r >= r`` holds on a prefix of the ranking, so a bisection finds the
    boundary in O(log N).
    """
    counts = record.counts
    lo, hi = 0, counts.size
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if counts[mid - 1] >= mid:
            lo = mid
        else:
            hi = mid - 1
    return lo


def o_index(record: CitationRecord) -> float:
    """Geometric mean of the top paper's citations and the h-index."""
    if record.n_papers == 0:
        return 0.0
    return math.sqrt(int(record.counts[0]) * h_index(record))


def summarize(record: CitationRecord) -> MetricSummary:
    n = record.n_papers
    total = int(record.counts.sum())
    top = int(record.counts[0]) if n else 0
    h = h_index(record)
    return MetricSummary(
        researcher_id=record.researcher_id,
        n_papers=n,
        total_citations=total,
        max_citations=top,
        mean_citations=total / n if n else 0.0,
        h_index=h,
        o_index=math.sqrt(top * h),
        h_ratio=h / math.sqrt(total) if total else 0.0,
    )


def summarize_all(records: Sequence[CitationRecord]) -> list[MetricSummary]:
    return [summarize(r) for r in records]


def round_half_up(value: float) -> int:
    """Integer display of a non-negative metric such as the o-index (1680.5 -> 1681)."""
    return math.floor(value + 0.5)
