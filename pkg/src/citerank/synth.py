"""Seeded synthetic researcher populations.

Each researcher gets an independent random stream derived from
``(seed, researcher_index)`` through :class:`numpy.random.SeedSequence`, so a
record can be regenerated on its own and populations can be built in any
order or in parallel.

Only uniform doubles are drawn from the bit generator (``Generator.random``,
53-bit integer path). Every distribution below is a fixed inverse-CDF
transform of those uniforms:

* papers ``fixed(N)``: always N.
* papers ``uniform(lo, hi)``: ``lo + floor(u * (hi - lo + 1))``, inclusive.
* papers ``loguniform(lo, hi)``: ``floor(exp(log(lo) + u * (log(hi + 1) - log(lo))))``,
  clipped to ``hi``; requires ``lo >= 1``.
* citations ``lognormal(mu, sigma)``: ``floor(exp(mu + sigma * Phi^-1(u)))``.
* citations ``powerlaw(alpha, c_max)``: discrete ``P(k) ~ k**-alpha`` on
  ``1..c_max`` sampled through its tabulated CDF.
* citations ``geometric(p)``: ``P(k) = p (1-p)**k`` on ``k = 0, 1, 2, ...``,
  sampled as ``floor(log(1-u) / log(1-p))``. Its mean is ``(1-p)/p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import spearmanr

from .errors import InvalidConfig
from .metrics import CitationRecord, MetricSummary, normalize_record

__all__ = [
    "Fixed",
    "Uniform",
    "LogUniform",
    "Lognormal",
    "PowerLaw",
    "Geometric",
    "PopulationConfig",
    "parse_distribution",
    "generate_record",
    "generate_population",
    "bin_by_total",
    "binned_rank_correlations",
]

SEED_MAX = 2**64 - 1
COUNT_CLIP = 10**15


@dataclass(frozen=True)
class Fixed:
    n: int

    def validate(self):
        if self.n < 0:
            raise InvalidConfig(f"fixed paper count must be >= 0, got {self.n}")

    def draw(self, u: float) -> int:
        return self.n

    def __str__(self):
        return f"fixed:{self.n}"


@dataclass(frozen=True)
class Uniform:
    lo: int
    hi: int

    def validate(self):
        if self.lo < 0 or self.lo > self.hi:
            raise InvalidConfig(f"uniform paper range needs 0 <= lo <= hi, got {self.lo}, {self.hi}")

    def draw(self, u: float) -> int:
        return min(self.hi, self.lo + math.floor(u * (self.hi - self.lo + 1)))

    def __str__(self):
        return f"uniform:{self.lo},{self.hi}"


@dataclass(frozen=True)
class LogUniform:
    lo: int
    hi: int

    def validate(self):
        if self.lo < 1 or self.lo > self.hi:
            raise InvalidConfig(f"loguniform paper range needs 1 <= lo <= hi, got {self.lo}, {self.hi}")

    def draw(self, u: float) -> int:
        a, b = math.log(self.lo), math.log(self.hi + 1)
        return min(self.hi, math.floor(math.exp(a + u * (b - a))))

    def __str__(self):
        return f"loguniform:{self.lo},{self.hi}"


@dataclass(frozen=True)
class Lognormal:
    mu: float
    sigma: float

    def validate(self):
        if not (self.sigma > 0) or not math.isfinite(self.mu):
            raise InvalidConfig(f"lognormal needs finite mu and sigma > 0, got {self.mu}, {self.sigma}")

    def draw(self, u: np.ndarray) -> np.ndarray:
        x = np.exp(self.mu + self.sigma * ndtri(u))
        return np.floor(np.minimum(x, COUNT_CLIP)).astype(np.int64)

    def __str__(self):
        return f"lognormal:{self.mu!r},{self.sigma!r}"


@lru_cache(maxsize=8)
def _powerlaw_cdf(alpha: float, c_max: int) -> np.ndarray:
    weights = np.arange(1, c_max + 1, dtype=float) ** -alpha
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    cdf.setflags(write=False)
    return cdf


@dataclass(frozen=True)
class PowerLaw:
    alpha: float
    c_max: int = 10**6

    def validate(self):
        if not (self.alpha > 1):
            raise InvalidConfig(f"power-law exponent must exceed 1, got {self.alpha}")
        if self.c_max < 1:
            raise InvalidConfig(f"power-law cap must be >= 1, got {self.c_max}")

    def draw(self, u: np.ndarray) -> np.ndarray:
        cdf = _powerlaw_cdf(float(self.alpha), int(self.c_max))
        return np.searchsorted(cdf, u, side="right").astype(np.int64) + 1

    def __str__(self):
        return f"powerlaw:{self.alpha!r},{self.c_max}"


@dataclass(frozen=True)
class Geometric:
    p: float

    def validate(self):
        if not (0 < self.p < 1):
            raise InvalidConfig(f"geometric p must lie in (0, 1), got {self.p}")

    def draw(self, u: np.ndarray) -> np.ndarray:
        return np.floor(np.log1p(-u) / math.log1p(-self.p)).astype(np.int64)

    @property
    def mean(self) -> float:
        return (1 - self.p) / self.p

    def __str__(self):
        return f"geometric:{self.p!r}"


PapersDistribution = Union[Fixed, Uniform, LogUniform]
CitationDistribution = Union[Lognormal, PowerLaw, Geometric]

_PAPERS = {"fixed": (Fixed, (int,)), "uniform": (Uniform, (int, int)),
           "loguniform": (LogUniform, (int, int))}
_CITATIONS = {"lognormal": (Lognormal, (float, float)), "powerlaw": (PowerLaw, (float, int)),
              "geometric": (Geometric, (float,))}


def parse_distribution(text: str, kind: str):
    """Parse ``"name:arg1,arg2"`` into a distribution object.

    ``kind`` is ``"papers"`` or ``"citations"``. ``powerlaw`` accepts an
    optional second argument (the cap).
    """
    table = _PAPERS if kind == "papers" else _CITATIONS
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower().replace("-", "").replace("_", "")
    if name not in table:
        raise InvalidConfig(f"unknown {kind} distribution {name!r}; choose from {sorted(table)}")
    cls, types = table[name]
    parts = [p.strip() for p in rest.split(",") if p.strip()]
    required = len(types) - (1 if cls is PowerLaw else 0)
    if not required <= len(parts) <= len(types):
        raise InvalidConfig(f"{name} takes {len(types)} argument(s), got {text!r}")
    try:
        args = []
        for t, p in zip(types, parts):
            value = float(p)
            if t is int:
                if not value.is_integer():
                    raise ValueError(p)
                value = int(value)
            args.append(value)
    except ValueError as exc:
        raise InvalidConfig(f"bad numeric argument in {text!r}") from exc
    dist = cls(*args)
    dist.validate()
    return dist


@dataclass(frozen=True)
class PopulationConfig:
    n_researchers: int
    papers: PapersDistribution = field(default_factory=lambda: LogUniform(20, 2000))
    citations: CitationDistribution = field(default_factory=lambda: Lognormal(1.0, 1.2))
    seed: int = 0

    def validate(self):
        if not isinstance(self.n_researchers, (int, np.integer)) or self.n_researchers < 1:
            raise InvalidConfig(f"n_researchers must be >= 1, got {self.n_researchers}")
        if not 0 <= self.seed <= SEED_MAX:
            raise InvalidConfig(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not isinstance(self.papers, (Fixed, Uniform, LogUniform)):
            raise InvalidConfig(f"unsupported papers distribution {self.papers!r}")
        if not isinstance(self.citations, (Lognormal, PowerLaw, Geometric)):
            raise InvalidConfig(f"unsupported citation distribution {self.citations!r}")
        self.papers.validate()
        self.citations.validate()

    def as_dict(self) -> dict:
        return {"n_researchers": int(self.n_researchers), "papers": str(self.papers),
                "citations": str(self.citations), "seed": int(self.seed)}


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def generate_record(config: PopulationConfig, researcher_index: int) -> CitationRecord:
    config.validate()
    if not 0 <= researcher_index < config.n_researchers:
        raise InvalidConfig(
            f"researcher_index {researcher_index} outside [0, {config.n_researchers})"
        )
    rng = _stream(int(config.seed), int(researcher_index))
    n = config.papers.draw(float(rng.random()))
    counts = config.citations.draw(rng.random(n))
    return normalize_record(f"synth-{researcher_index}", counts)


def generate_population(config: PopulationConfig) -> list[CitationRecord]:
    config.validate()
    return [generate_record(config, i) for i in range(config.n_researchers)]


def bin_by_total(
    summaries: Sequence[MetricSummary], relative_window: float
) -> list[list[MetricSummary]]:
    """Group researchers of near-equal total citations.

    Bins are a fixed logarithmic grid whose edges grow by the factor
    ``(1 + w) / (1 - w)``, i.e. each bin spans ``C0 * (1 +- w)`` around its
    geometric centre. Researchers with C = 0 share one extra bin placed first.
    Bins are returned in ascending C order with input order kept inside a bin.
    """
    if not 0 < relative_window < 1:
        raise ValueError(f"relative_window must lie in (0, 1), got {relative_window}")
    step = math.log((1 + relative_window) / (1 - relative_window))
    groups: dict[int, list[MetricSummary]] = {}
    for s in summaries:
        key = -1 if s.total_citations <= 0 else math.floor(math.log(s.total_citations) / step)
        groups.setdefault(key, []).append(s)
    return [groups[k] for k in sorted(groups)]


def binned_rank_correlations(
    bins: Sequence[Sequence[MetricSummary]], x: str, y: str, min_size: int = 30
) -> list[tuple[int, float]]:
    """Spearman correlation of two summary attributes inside every bin of at least ``min_size``.

    Returns ``(bin_size, rho)`` pairs; bins where either attribute is constant
    are skipped.
    """
    out = []
    for group in bins:
        if len(group) < min_size:
            continue
        xs = np.array([getattr(s, x) for s in group], dtype=float)
        ys = np.array([getattr(s, y) for s in group], dtype=float)
        if np.ptp(xs) == 0 or np.ptp(ys) == 0:
            continue
        out.append((len(group), float(spearmanr(xs, ys).statistic)))
    return out
