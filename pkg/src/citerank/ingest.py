"""Reading and writing citation records, plus a small works-API client with a JSON-lines cache.

File formats
------------
CSV
    Header ``id,citations``, one row per paper, UTF-8, LF or CRLF. Fields are
    quoted only when they contain commas or quotes. A row with an empty
    ``citations`` field lists a researcher with no papers.
JSON
    An array of ``{"id": str, "counts": [int, ...]}`` objects. Duplicate ids
    are merged.
Cache
    JSON lines ``{"id": str, "counts": [int, ...], "fetched_at": RFC 3339}``,
    append-only; the last line for an id wins.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import random
import tempfile
import threading
import time
import warnings
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from pathlib import Path
from typing import IO, Iterable, Sequence

import requests

from . import __version__
from .errors import (
    AuthorNotFound,
    CacheCorrupt,
    InvalidConfig,
    MalformedDocument,
    MalformedRow,
    NegativeCount,
    SchemaMismatch,
    TransportError,
)
from .metrics import CitationRecord, normalize_record

log = logging.getLogger(__name__)

__all__ = [
    "parse_csv",
    "write_csv",
    "parse_json",
    "write_json",
    "load_records",
    "SourceConfig",
    "RateLimiter",
    "fetch_author",
    "cache_append",
    "cache_load",
    "cache_load_all",
    "cache_compact",
]

CSV_HEADER = ("id", "citations")


def _read_text(stream) -> str:
    if isinstance(stream, str):
        return stream
    data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _records_from_groups(groups: dict[str, list[int]]) -> list[CitationRecord]:
    return [normalize_record(rid, counts) for rid, counts in groups.items()]


def parse_csv(stream: IO[str] | str) -> list[CitationRecord]:
    """Parse the ``id,citations`` CSV schema into one record per researcher.

    Line numbers in errors are 1-based physical lines, header included.
    """
    text = _read_text(stream).lstrip("﻿")
    reader = csv.reader(io.StringIO(text, newline=""))
    groups: dict[str, list[int]] = {}
    header_seen = False
    for row in reader:
        line_no = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if not header_seen:
            if tuple(f.strip().lower() for f in row) != CSV_HEADER:
                raise MalformedRow(line_no, f"expected header 'id,citations', got {','.join(row)!r}")
            header_seen = True
            continue
        if len(row) != 2:
            raise MalformedRow(line_no, f"expected 2 fields, got {len(row)}")
        rid, raw = row[0], row[1].strip()
        if not rid:
            raise MalformedRow(line_no, "empty researcher id")
        counts = groups.setdefault(rid, [])
        if raw == "":
            continue
        try:
            value = int(raw)
        except ValueError:
            raise MalformedRow(line_no, f"citation count {raw!r} is not an integer") from None
        if value < 0:
            raise NegativeCount(line_no)
        counts.append(value)
    return _records_from_groups(groups)


def write_csv(records: Iterable[CitationRecord], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        if rec.n_papers == 0:
            writer.writerow([rec.researcher_id, ""])
        for c in rec.counts.tolist():
            writer.writerow([rec.researcher_id, c])


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def parse_json(stream: IO[str] | str) -> list[CitationRecord]:
    text = _read_text(stream)
    if not text.strip():
        return []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    if not isinstance(doc, list):
        raise MalformedDocument("top level must be an array")
    groups: dict[str, list[int]] = {}
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or "id" not in item or "counts" not in item:
            raise MalformedDocument(f"item {i} must be an object with 'id' and 'counts'")
        rid, counts = item["id"], item["counts"]
        if not isinstance(rid, str) or not rid:
            raise MalformedDocument(f"item {i}: id must be a non-empty string")
        if not isinstance(counts, list):
            raise MalformedDocument(f"item {i}: counts must be an array")
        for c in counts:
            if not _is_int(c):
                raise MalformedDocument("non-integer count")
            if c < 0:
                raise NegativeCount(i, f"negative citation count in item {i} ({rid!r})")
        groups.setdefault(rid, []).extend(counts)
    return _records_from_groups(groups)


def write_json(records: Iterable[CitationRecord], stream: IO[str]) -> None:
    doc = [{"id": r.researcher_id, "counts": r.counts.tolist()} for r in records]
    json.dump(doc, stream)
    stream.write("\n")


def load_records(path: str | os.PathLike, fmt: str | None = None) -> list[CitationRecord]:
    """Read a records file; ``fmt`` defaults to the extension (``.json`` or CSV)."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_json(fh) if fmt == "json" else parse_csv(fh)


# -- works API client -------------------------------------------------------


@dataclass(frozen=True)
class SourceConfig:
    """Connection settings for a paged "works" endpoint.

    Defaults follow OpenAlex naming (``/works?filter=author.id:...``, a
    ``results`` list, ``cited_by_count`` per work, ``meta.next_cursor``); every
    field path can be overridden for other providers with the same shape.
    """

    base_url: str = "https://api.openalex.org"
    rate_limit: float = 5.0
    max_retries: int = 3
    timeout: float = 30.0
    cache_path: str = "citerank-cache.jsonl"
    contact_email: str | None = None
    works_path: str = "/works"
    author_filter: str = "author.id:{author_id}"
    results_field: str = "results"
    count_field: str = "cited_by_count"
    cursor_field: str = "meta.next_cursor"
    per_page: int = 200
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    jitter: float = 0.25

    def validate(self):
        if not self.rate_limit > 0:
            raise InvalidConfig(f"rate_limit must be > 0, got {self.rate_limit}")
        if self.max_retries < 0:
            raise InvalidConfig(f"max_retries must be >= 0, got {self.max_retries}")
        if not self.timeout > 0:
            raise InvalidConfig(f"timeout must be > 0, got {self.timeout}")
        if self.per_page < 1:
            raise InvalidConfig("per_page must be >= 1")
        if not self.base_url:
            raise InvalidConfig("base_url is required")

    def headers(self) -> dict:
        agent = f"citerank/{__version__}"
        if self.contact_email:
            return {"User-Agent": f"{agent} (mailto:{self.contact_email})",
                    "From": self.contact_email}
        return {"User-Agent": agent}


class RateLimiter:
    """Sliding-window limiter: never more than ``rate`` calls in any window of one second.

    For rates below one call per second the window stretches to ``1/rate``.
    Thread-safe.
    """

    def __init__(self, rate: float, margin: float = 0.02, clock=time.monotonic, sleep=time.sleep):
        if not rate > 0:
            raise InvalidConfig(f"rate must be > 0, got {rate}")
        self.capacity = max(1, math.floor(rate))
        self.window = max(1.0, 1.0 / rate) + margin
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()
        self._clock = clock
        self._sleep = sleep

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.capacity:
                    self._stamps.append(now)
                    return
                self._sleep(self.window - (now - self._stamps[0]))


_limiters: dict[tuple[str, float], RateLimiter] = {}
_limiters_lock = threading.Lock()


def _limiter_for(config: SourceConfig) -> RateLimiter:
    key = (config.base_url, float(config.rate_limit))
    with _limiters_lock:
        if key not in _limiters:
            _limiters[key] = RateLimiter(config.rate_limit)
        return _limiters[key]


def _lookup(doc, dotted: str):
    node = doc
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise KeyError(dotted)
        node = node[part]
    return node


def _retry_after(response) -> float | None:
    value = response.headers.get("Retry-After")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        pass
    try:
        when = parsedate_to_datetime(value)
    except (TypeError, ValueError):
        return None
    return max(0.0, (when - datetime.now(timezone.utc)).total_seconds())


def _get_page(session, url, params, config, limiter, rng, author_id):
    attempts = config.max_retries + 1
    last = "no attempt made"
    for attempt in range(attempts):
        limiter.acquire()
        wait = None
        try:
            resp = session.get(url, params=params, headers=config.headers(),
                               timeout=config.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            last = f"{type(exc).__name__}: {exc}"
        else:
            if resp.status_code == 404:
                raise AuthorNotFound(author_id)
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code} from {url}"
                if resp.status_code == 429:
                    wait = _retry_after(resp)
            elif resp.status_code >= 400:
                raise TransportError(f"HTTP {resp.status_code} from {url}")
            else:
                try:
                    return resp.json()
                except ValueError:
                    raise SchemaMismatch(f"response from {url} is not JSON") from None
        if attempt + 1 < attempts:
            delay = config.backoff_base * config.backoff_factor**attempt
            delay *= 1 + config.jitter * rng.random()
            if wait is not None:
                delay = max(delay, wait)
            log.debug("retrying %s in %.2fs (%s)", url, delay, last)
            time.sleep(delay)
    raise TransportError(f"{last} (gave up after {attempts} attempts)")


def fetch_author(config: SourceConfig, author_id: str, session=None, seed: int = 0) -> CitationRecord:
    """Page through the author's works and return their citation record.

    The record is appended to ``config.cache_path`` before returning.
    ``seed`` fixes the backoff jitter.
    """
    config.validate()
    if not author_id:
        raise ValueError("author_id must be non-empty")
    session = session or requests.Session()
    limiter = _limiter_for(config)
    rng = random.Random(seed)
    url = config.base_url.rstrip("/") + config.works_path
    params = {"filter": config.author_filter.format(author_id=author_id),
              "per-page": config.per_page, "cursor": "*"}
    counts: list[int] = []
    while True:
        page = _get_page(session, url, dict(params), config, limiter, rng, author_id)
        try:
            works = _lookup(page, config.results_field)
        except KeyError:
            raise SchemaMismatch(f"response lacks {config.results_field!r}") from None
        if not isinstance(works, list):
            raise SchemaMismatch(f"{config.results_field!r} is not a list")
        for work in works:
            try:
                c = _lookup(work, config.count_field)
            except KeyError:
                raise SchemaMismatch(f"work lacks {config.count_field!r}") from None
            if not _is_int(c) or c < 0:
                raise SchemaMismatch(f"{config.count_field!r} = {c!r} is not a non-negative integer")
            counts.append(c)
        try:
            cursor = _lookup(page, config.cursor_field)
        except KeyError:
            cursor = None
        if not cursor or not works:
            break
        params["cursor"] = cursor
    record = normalize_record(author_id, counts)
    cache_append(config.cache_path, record)
    return record


# -- cache --------------------------------------------------------------------

_cache_locks: dict[str, threading.Lock] = {}
_cache_locks_guard = threading.Lock()


def _cache_lock(path) -> threading.Lock:
    key = os.path.abspath(path)
    with _cache_locks_guard:
        return _cache_locks.setdefault(key, threading.Lock())


def _now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _cache_line(record: CitationRecord, fetched_at: str) -> str:
    return json.dumps({"id": record.researcher_id, "counts": record.counts.tolist(),
                       "fetched_at": fetched_at})


def cache_append(path, record: CitationRecord, fetched_at: str | None = None) -> None:
    line = _cache_line(record, fetched_at or _now_rfc3339())
    with _cache_lock(path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())


def _decode_cache_line(line: str):
    doc = json.loads(line)
    if not isinstance(doc, dict):
        raise ValueError("not an object")
    rid, counts = doc.get("id"), doc.get("counts")
    if not isinstance(rid, str) or not rid:
        raise ValueError("missing id")
    if not isinstance(counts, list) or not all(_is_int(c) and c >= 0 for c in counts):
        raise ValueError("counts must be non-negative integers")
    if not isinstance(doc.get("fetched_at"), str):
        raise ValueError("missing fetched_at")
    return rid, counts, doc["fetched_at"]


def _scan_cache(path) -> dict[str, tuple[list[int], str]]:
    latest: dict[str, tuple[list[int], str]] = {}
    path = Path(path)
    if not path.exists():
        return latest
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rid, counts, stamp = _decode_cache_line(line)
            except ValueError as exc:
                warnings.warn(CacheCorrupt(line_no, str(exc)), stacklevel=3)
                continue
            latest.pop(rid, None)
            latest[rid] = (counts, stamp)
    return latest


def cache_load(config: SourceConfig | str | os.PathLike, author_id: str) -> CitationRecord | None:
    """Latest cached record for ``author_id`` or ``None``.

    Undecodable lines emit a :class:`CacheCorrupt` warning and are skipped.
    """
    path = config.cache_path if isinstance(config, SourceConfig) else config
    hit = _scan_cache(path).get(author_id)
    return None if hit is None else normalize_record(author_id, hit[0])


def cache_load_all(path) -> list[CitationRecord]:
    return [normalize_record(rid, counts) for rid, (counts, _) in _scan_cache(path).items()]


def cache_compact(path) -> tuple[int, int]:
    """Rewrite the cache keeping only the latest line per id.

    Returns ``(kept, dropped)`` line counts. The rewrite is atomic.
    """
    path = Path(path)
    with _cache_lock(path):
        if not path.exists():
            return 0, 0
        with open(path, encoding="utf-8") as fh:
            total = sum(1 for line in fh if line.strip())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CacheCorrupt)
            latest = _scan_cache(path)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                for rid, (counts, stamp) in latest.items():
                    fh.write(json.dumps({"id": rid, "counts": counts, "fetched_at": stamp}) + "\n")
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    return len(latest), total - len(latest)


def records_to_text(records: Sequence[CitationRecord], fmt: str = "csv") -> str:
    buf = io.StringIO()
    (write_json if fmt == "json" else write_csv)(records, buf)
    return buf.getvalue()
