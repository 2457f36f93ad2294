"""Command-line interface.

Subcommands: ``metrics``, ``fit``, ``simulate``, ``rank``, ``fetch``,
``cache-compact``. Run ``citerank <command> --help`` for the flags.

Every flag may also come from ``--config FILE``, a plain ``key = value``
file (an optional ``[citerank]`` section header is allowed; ``#`` starts a
comment). Keys are the long flag names with dashes or underscores, e.g.
``min-C = 100`` or ``rate_limit = 2``. Flags given on the command line win
over the file.

Exit codes: 0 success, 2 input or configuration error, 3 statistical
precondition failure (too few points, singular design), 4 at least one
author failed in ``fetch``.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import (
    AuthorNotFound,
    CiteRankError,
    InvalidConfig,
    SchemaMismatch,
    SingularDesign,
    TooFewPoints,
    TransportError,
)
from .fitting import build_dataset, dataset_from_arrays, ols_fit, scaling_fit
from .ingest import (
    SourceConfig,
    cache_compact,
    fetch_author,
    parse_csv,
    parse_json,
    write_csv,
)
from .metrics import summarize
from .ranking import (
    METRICS,
    compare_rankings,
    emit_fig1_data,
    emit_fig2_data,
    format_number,
    rank_by,
)
from .synth import PopulationConfig, generate_population, parse_distribution

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STATS = 3
EXIT_NETWORK = 4

FIG1_HEADER = ["id", "sqrt_C", "h_ratio", "mean_c"]


class UsageError(Exception):
    """Bad input or settings; maps to exit code 2."""


# -- manifest -----------------------------------------------------------------


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def config_digest(settings: dict) -> str:
    blob = json.dumps(settings, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_digest: str
    input_digests: dict = field(default_factory=dict)
    tool_version: str = __version__
    timestamp: str = ""
    settings: dict = field(default_factory=dict)

    @classmethod
    def build(cls, command: str, settings: dict, inputs=()):
        return cls(
            command=command,
            config_digest=config_digest(settings),
            input_digests={str(p): _sha256_file(p) for p in inputs if str(p) != "-"},
            timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z"),
            settings=settings,
        )

    def write_beside(self, output) -> Path:
        path = Path(str(output) + ".manifest.json")
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str) + "\n",
                        encoding="utf-8")
        return path


# -- settings -------------------------------------------------------------------


def _u64(text) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type, default); keys double as argparse dest names
SETTINGS = {
    "format": (str, "table"),
    "seed": (_u64, 0),
    "min_C": (int, None),
    "input_format": (str, "auto"),
    "fig1": (str, None),
    "fig2": (str, None),
    "scaling": (_bool, False),
    "scaling_method": (str, "mean"),
    "n_researchers": (int, 1000),
    "papers": (str, "loguniform:20,2000"),
    "citations": (str, "lognormal:1,1.2"),
    "output": (str, None),
    "metric": (str, "o"),
    "compare": (str, None),
    "top": (int, 10),
    "base_url": (str, SourceConfig.base_url),
    "rate_limit": (float, SourceConfig.rate_limit),
    "max_retries": (int, SourceConfig.max_retries),
    "timeout": (float, SourceConfig.timeout),
    "cache": (str, SourceConfig.cache_path),
    "contact_email": (str, None),
    "count_field": (str, SourceConfig.count_field),
    "results_field": (str, SourceConfig.results_field),
    "cursor_field": (str, SourceConfig.cursor_field),
    "author_filter": (str, SourceConfig.author_filter),
    "works_path": (str, SourceConfig.works_path),
    "per_page": (int, SourceConfig.per_page),
    "backoff_base": (float, SourceConfig.backoff_base),
}

_KEY_ALIASES = {k.lower(): k for k in SETTINGS}


def read_config_file(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[citerank]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    out = {}
    for section in parser.sections():
        for raw_key, raw_value in parser.items(section):
            key = _KEY_ALIASES.get(raw_key.strip().replace("-", "_").lower())
            if key is None:
                raise UsageError(f"{path}: unknown setting {raw_key!r}")
            conv = SETTINGS[key][0]
            try:
                out[key] = conv(raw_value.strip())
            except ValueError as exc:
                raise UsageError(f"{path}: bad value for {raw_key}: {exc}") from None
    return out


def resolve_settings(args: argparse.Namespace, keys) -> dict:
    given = vars(args)
    from_file = read_config_file(given["config"]) if given.get("config") else {}
    settings = {}
    for key in keys:
        if key in given:
            settings[key] = given[key]
        elif key in from_file:
            settings[key] = from_file[key]
        else:
            settings[key] = SETTINGS[key][1]
    return settings


# -- input helpers ------------------------------------------------------------------


def _open_text(path):
    if path == "-":
        return io.StringIO(sys.stdin.read())
    try:
        return open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _detect_format(path, text, requested):
    if requested != "auto":
        return requested
    if str(path).lower().endswith(".json") or text.lstrip().startswith("["):
        return "json"
    return "csv"


def load_inputs(paths, input_format="auto"):
    """Read record files and return their summaries; ids must be unique across files."""
    summaries, seen = [], {}
    for path in paths:
        with _open_text(path) as fh:
            text = fh.read()
        fmt = _detect_format(path, text, input_format)
        try:
            records = parse_json(text) if fmt == "json" else parse_csv(text)
        except CiteRankError as exc:
            raise UsageError(f"{path}: {exc}") from None
        for rec in records:
            if rec.researcher_id in seen:
                raise UsageError(
                    f"{path}: researcher {rec.researcher_id!r} already read from {seen[rec.researcher_id]}"
                )
            seen[rec.researcher_id] = path
            summaries.append(summarize(rec))
    return summaries


def _read_fig1_table(path, text):
    reader = csv.reader(io.StringIO(text, newline=""))
    next(reader)
    ids, x1, x2, y = [], [], [], []
    for row in reader:
        if not row:
            continue
        if len(row) != 4:
            raise UsageError(f"{path}: line {reader.line_num}: expected 4 fields")
        try:
            sqrt_c, ratio, mean_c = float(row[1]), float(row[2]), float(row[3])
        except ValueError:
            raise UsageError(f"{path}: line {reader.line_num}: non-numeric value") from None
        if not (sqrt_c > 0 and mean_c > 0):
            raise UsageError(f"{path}: line {reader.line_num}: sqrt_C and mean_c must be positive")
        ids.append(row[0])
        x1.append(sqrt_c)
        x2.append(math.sqrt(mean_c))
        y.append(ratio)
    return ids, x1, x2, y


# -- output helpers -------------------------------------------------------------------


def _render(rows, columns, fmt, out):
    """Print a list of dict rows as an aligned table, CSV or a JSON array."""
    if fmt == "json":
        json.dump(rows, out, indent=2)
        out.write("\n")
        return
    cells = [[format_number(r[c]) if not isinstance(r[c], str) else r[c] for c in columns]
             for r in rows]
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(cells)
        return
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    out.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
    for row in cells:
        out.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")


def _render_mapping(mapping, fmt, out):
    if fmt == "json":
        json.dump(mapping, out, indent=2)
        out.write("\n")
        return
    flat = []
    for section, values in mapping.items():
        for key, value in values.items():
            flat.append({"key": f"{section}.{key}", "value": value})
    _render(flat, ["key", "value"], fmt, out)


def _write_with_manifest(path, writer_fn, command, settings, inputs):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer_fn(fh)
    RunManifest.build(command, settings, inputs).write_beside(path)


# -- commands -----------------------------------------------------------------------


def cmd_metrics(args, out):
    s = resolve_settings(args, ["format", "input_format", "fig1", "fig2"])
    summaries = load_inputs(args.inputs, s["input_format"])
    rows = [x.as_dict() for x in summaries]
    _render(rows, ["id", "N", "C", "m", "mean_c", "h", "o", "h_ratio"], s["format"], out)
    settings = dict(s, command="metrics", inputs=list(args.inputs))
    if s["fig1"]:
        _write_with_manifest(s["fig1"], lambda fh: emit_fig1_data(summaries, fh), "metrics",
                             settings, args.inputs)
    if s["fig2"]:
        _write_with_manifest(s["fig2"], lambda fh: emit_fig2_data(summaries, fh), "metrics",
                             settings, args.inputs)
    return EXIT_OK


def cmd_fit(args, out):
    s = resolve_settings(args, ["format", "input_format", "min_C", "scaling", "scaling_method"])
    if s["scaling_method"] not in ("mean", "log"):
        raise UsageError(f"--scaling-method must be 'mean' or 'log', got {s['scaling_method']!r}")
    record_paths, tables = [], []
    for path in args.inputs:
        with _open_text(path) as fh:
            text = fh.read()
        first = text.lstrip("﻿").splitlines()[0] if text.strip() else ""
        if [f.strip() for f in first.split(",")] == FIG1_HEADER:
            tables.append(_read_fig1_table(path, text))
        else:
            record_paths.append(path)
    if tables and s["scaling"]:
        raise UsageError("--scaling needs citation records, not figure-data tables")

    summaries = load_inputs(record_paths, s["input_format"]) if record_paths else []
    if not tables:
        data = build_dataset(summaries, min_C=s["min_C"])
    else:
        data = _merge_fig1_tables(summaries, tables, s["min_C"])
    report = {"fit": ols_fit(data).as_dict()}
    if s["scaling"]:
        kept = [x for x in summaries if s["min_C"] is None or x.total_citations >= s["min_C"]]
        report["scaling"] = scaling_fit(kept, method=s["scaling_method"]).as_dict()
    _render_mapping(report, s["format"], out)
    return EXIT_OK


def _merge_fig1_tables(summaries, tables, min_C):
    ids, x1, x2, y = [], [], [], []
    if summaries:
        usable = [x for x in summaries if x.total_citations > 0 and x.n_papers > 0
                  and (min_C is None or x.total_citations >= min_C)]
        ids += [x.researcher_id for x in usable]
        x1 += [math.sqrt(x.total_citations) for x in usable]
        x2 += [math.sqrt(x.mean_citations) for x in usable]
        y += [x.h_ratio for x in usable]
    for t_ids, t_x1, t_x2, t_y in tables:
        for rid, a, b, c in zip(t_ids, t_x1, t_x2, t_y):
            if min_C is not None and a * a < min_C:
                continue
            ids.append(rid)
            x1.append(a)
            x2.append(b)
            y.append(c)
    return dataset_from_arrays(x1, x2, y, ids)


def population_config(s) -> PopulationConfig:
    return PopulationConfig(
        n_researchers=s["n_researchers"],
        papers=parse_distribution(s["papers"], "papers"),
        citations=parse_distribution(s["citations"], "citations"),
        seed=s["seed"],
    )


def cmd_simulate(args, out):
    s = resolve_settings(args, ["format", "seed", "n_researchers", "papers", "citations", "output"])
    if not s["output"]:
        raise UsageError("simulate needs an output path (-o/--output)")
    config = population_config(s)
    records = generate_population(config)
    settings = dict(config.as_dict(), command="simulate", output=s["output"])
    _write_with_manifest(s["output"], lambda fh: write_csv(records, fh), "simulate", settings, [])
    out.write(f"wrote {len(records)} researchers to {s['output']}\n")
    return EXIT_OK


def cmd_rank(args, out):
    s = resolve_settings(args, ["format", "input_format", "metric", "compare", "top"])
    if s["metric"] not in METRICS:
        raise UsageError(f"unknown metric {s['metric']!r}; choose from {', '.join(METRICS)}")
    summaries = load_inputs(args.inputs, s["input_format"])
    table = rank_by(summaries, s["metric"])
    rows = [{"rank": e.rank, "id": e.researcher_id, s["metric"]: e.value} for e in table.entries]
    if not s["compare"]:
        _render(rows, ["rank", "id", s["metric"]], s["format"], out)
        return EXIT_OK

    parts = [p.strip() for p in s["compare"].split(",")]
    if len(parts) != 2 or any(p not in METRICS for p in parts):
        raise UsageError(f"--compare takes two metrics like 'h,o', got {s['compare']!r}")
    a, b = rank_by(summaries, parts[0]), rank_by(summaries, parts[1])
    comparison = compare_rankings(a, b)
    ranks_a, ranks_b = a.rank_of(), b.rank_of()
    moves = [{"id": rid, f"rank_{parts[0]}": ranks_a[rid], f"rank_{parts[1]}": ranks_b[rid],
              "displacement": d} for rid, d in comparison.largest_moves(s["top"])]
    tau = comparison.kendall_tau
    if s["format"] == "json":
        doc = {"ranking": rows, "compare": parts, "largest_moves": moves}
        if not math.isnan(tau):
            doc["kendall_tau"] = tau
        json.dump(doc, out, indent=2)
        out.write("\n")
        return EXIT_OK
    _render(rows, ["rank", "id", s["metric"]], s["format"], out)
    out.write("\n")
    if not math.isnan(tau):
        out.write(f"kendall_tau({parts[0]},{parts[1]}) = {format_number(tau)}\n")
    _render(moves, ["id", f"rank_{parts[0]}", f"rank_{parts[1]}", "displacement"], s["format"], out)
    return EXIT_OK


def source_config(s) -> SourceConfig:
    return SourceConfig(
        base_url=s["base_url"], rate_limit=s["rate_limit"], max_retries=s["max_retries"],
        timeout=s["timeout"], cache_path=s["cache"], contact_email=s["contact_email"],
        works_path=s["works_path"], author_filter=s["author_filter"],
        results_field=s["results_field"], count_field=s["count_field"],
        cursor_field=s["cursor_field"], per_page=s["per_page"], backoff_base=s["backoff_base"],
    )


_FETCH_KEYS = ["format", "seed", "base_url", "rate_limit", "max_retries", "timeout", "cache",
               "contact_email", "works_path", "author_filter", "results_field", "count_field",
               "cursor_field", "per_page", "backoff_base"]


def cmd_fetch(args, out):
    s = resolve_settings(args, _FETCH_KEYS)
    config = source_config(s)
    config.validate()
    rows, failed = [], 0
    for author in args.authors:
        try:
            rec = fetch_author(config, author, seed=s["seed"])
        except (AuthorNotFound, TransportError, SchemaMismatch) as exc:
            failed += 1
            rows.append({"id": author, "status": "failed", "N": "", "detail": str(exc)})
        else:
            rows.append({"id": author, "status": "ok", "N": rec.n_papers, "detail": ""})
    _render(rows, ["id", "status", "N", "detail"], s["format"], out)
    settings = dict(s, command="fetch", authors=list(args.authors))
    settings.pop("contact_email", None)
    RunManifest.build("fetch", settings).write_beside(config.cache_path)
    return EXIT_NETWORK if failed else EXIT_OK


def cmd_cache_compact(args, out):
    s = resolve_settings(args, ["format", "cache"])
    kept, dropped = cache_compact(s["cache"])
    _render([{"cache": s["cache"], "kept": kept, "dropped": dropped}],
            ["cache", "kept", "dropped"], s["format"], out)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--format", choices=["table", "csv", "json"], help="output format (default: table)")
    p.add_argument("--seed", type=_u64, help="random seed for every stochastic step (default: 0)")
    p.add_argument("--min-C", dest="min_C", type=int, help="drop researchers with fewer total citations")
    p.add_argument("--config", help="key = value settings file; flags override it")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="citerank", description=__doc__.split("\n\n")[0],
                                     parents=[common])
    parser.add_argument("--version", action="version", version=f"citerank {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sup = argparse.SUPPRESS

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text, parents=[common],
                           argument_default=sup)
        p.set_defaults(func=func)
        return p

    p = add("metrics", cmd_metrics, "Per-researcher N, C, m, <c>, h, o and h/sqrt(C).")
    p.add_argument("inputs", nargs="+", help="record files (CSV or JSON; '-' for stdin)")
    p.add_argument("--input-format", choices=["auto", "csv", "json"])
    p.add_argument("--fig1", help="also write h/sqrt(C) vs sqrt(C) figure data to this CSV")
    p.add_argument("--fig2", help="also write o vs h figure data to this CSV")

    p = add("fit", cmd_fit, "Least-squares fit of h/sqrt(C) on sqrt(C) and sqrt(<c>).")
    p.add_argument("inputs", nargs="+", help="record files or fig1 data tables")
    p.add_argument("--input-format", choices=["auto", "csv", "json"])
    p.add_argument("--scaling", action="store_true", help="also fit o ~ k C^1/2 <c>^1/4")
    p.add_argument("--scaling-method", choices=["mean", "log"])

    p = add("simulate", cmd_simulate, "Write a synthetic population as records CSV.")
    p.add_argument("-o", "--output", help="output CSV path")
    p.add_argument("--n-researchers", dest="n_researchers", type=int)
    p.add_argument("--papers", help="fixed:N | uniform:LO,HI | loguniform:LO,HI")
    p.add_argument("--citations", help="lognormal:MU,SIGMA | powerlaw:ALPHA[,CMAX] | geometric:P")

    p = add("rank", cmd_rank, "Rank researchers by a metric, optionally comparing two metrics.")
    p.add_argument("inputs", nargs="+", help="record files (CSV or JSON)")
    p.add_argument("--input-format", choices=["auto", "csv", "json"])
    p.add_argument("--metric", choices=list(METRICS))
    p.add_argument("--compare", help="two metrics, e.g. h,o")
    p.add_argument("--top", type=int, help="number of largest rank moves to list (default: 10)")

    p = add("fetch", cmd_fetch, "Fetch authors' works from an API into the cache.")
    p.add_argument("authors", nargs="+", help="author identifiers")
    p.add_argument("--base-url", dest="base_url")
    p.add_argument("--rate-limit", dest="rate_limit", type=float, help="max requests per second")
    p.add_argument("--max-retries", dest="max_retries", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--cache", help="cache file (JSON lines)")
    p.add_argument("--contact-email", dest="contact_email")
    p.add_argument("--count-field", dest="count_field")
    p.add_argument("--results-field", dest="results_field")
    p.add_argument("--cursor-field", dest="cursor_field")
    p.add_argument("--author-filter", dest="author_filter")
    p.add_argument("--works-path", dest="works_path")
    p.add_argument("--per-page", dest="per_page", type=int)
    p.add_argument("--backoff-base", dest="backoff_base", type=float)

    p = add("cache-compact", cmd_cache_compact, "Keep only the latest cache line per author.")
    p.add_argument("--cache", help="cache file (JSON lines)")
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (TooFewPoints, SingularDesign) as exc:
        err.write(f"citerank {args.command}: {exc}\n")
        return EXIT_STATS
    except (UsageError, InvalidConfig, CiteRankError, ValueError) as exc:
        err.write(f"citerank {args.command}: error: {exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        err.write(f"citerank {args.command}: error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
