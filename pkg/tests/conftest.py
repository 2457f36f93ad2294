import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np
import pytest

from citerank.metrics import normalize_record


def brute_force_h(counts):
    """Scan every rank r = 1..N and keep the largest with c_r >= r."""
    best = 0
    for r in range(1, len(counts) + 1):
        if counts[r - 1] >= r:
            best = r
    return best


def perdew_record():
    # m = 37641 and N = 317 are published; h = 75 is the only integer giving o ~ 1680.
    counts = [37641] + [2000] * 40 + [300] * 34 + [60] * 242
    return normalize_record("Perdew", counts)


def heeger_record():
    # m = 5482 and N = 1284 are published; the rest of the record is made up
    # with an h above Perdew's, as in the h-based ranking.
    counts = [5482] + [900] * 60 + [200] * 49 + [60] * 1174
    return normalize_record("Heeger", counts)


@pytest.fixture
def perdew():
    return perdew_record()


@pytest.fixture
def heeger():
    return heeger_record()


def heavy_tailed_records(n_records, seed, max_papers=10_000):
    """Records with log-uniform N in [0, max_papers] and Pareto-like counts."""
    rng = np.random.default_rng(seed)
    for i in range(n_records):
        n = int(np.floor(np.exp(rng.uniform(0, np.log(max_papers + 1))))) - 1
        alpha = rng.uniform(1.2, 3.0)
        scale = rng.uniform(0.5, 20)
        counts = np.floor(scale * (rng.pareto(alpha, n) + rng.random(n))).astype(np.int64)
        yield normalize_record(f"r{i}", counts)


class StubWorksServer:
    """Local works API. ``script`` maps author id -> list of responses served in order.

    Each response is ``(status, body_dict_or_None, headers)``; the last one
    repeats once the list is exhausted. Every request is logged with its
    arrival time.
    """

    def __init__(self):
        self.script = {}
        self.log = []
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                url = urlparse(self.path)
                query = parse_qs(url.query)
                author = query.get("filter", [""])[0].split(":", 1)[-1]
                with stub._lock:
                    stub.log.append({"t": time.monotonic(), "author": author,
                                     "cursor": query.get("cursor", [None])[0],
                                     "headers": dict(self.headers), "path": url.path})
                    seen = sum(1 for e in stub.log if e["author"] == author)
                    responses = stub.script.get(author, [(404, {"error": "not found"}, {})])
                    status, body, headers = responses[min(seen, len(responses)) - 1]
                if callable(body):
                    body = body(query)
                payload = json.dumps(body).encode() if body is not None else b""
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                for k, v in headers.items():
                    self.send_header(k, v)
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self):
        host, port = self.server.server_address
        return f"http://{host}:{port}"

    def requests_for(self, author):
        return [e for e in self.log if e["author"] == author]

    def close(self):
        self.server.shutdown()
        self.server.server_close()


def paged(pages):
    """Serve ``pages`` (lists of counts) behind cursors "c1", "c2", ..."""

    def body(query):
        cursor = query.get("cursor", ["*"])[0]
        i = 0 if cursor == "*" else int(cursor[1:])
        nxt = f"c{i + 1}" if i + 1 < len(pages) else None
        return {"meta": {"next_cursor": nxt},
                "results": [{"id": f"W{i}-{j}", "cited_by_count": c} for j, c in enumerate(pages[i])]}

    return body


@pytest.fixture
def stub_server():
    server = StubWorksServer()
    yield server
    server.close()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
