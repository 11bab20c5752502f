"""Command line driver: ingest, generate, analyze, compare.

Exit status is 0 on success, 1 on a usage or configuration error and 2 when
the data itself is unusable (missing files, no valid threads).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from urllib.parse import quote

import numpy as np

from . import dynamics, generator, metrics, stats
from .graph import from_thread, write_edgelist
from .ingest import (
    PROFILES,
    ParseReport,
    ThreadRecord,
    get_profile,
    parse_files,
    serialize_thread,
    vote_labels,
)

logger = logging.getLogger("threadnet")

OUTPUT_ENV = "THREADNET_OUTPUT_DIR"
EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    inputs: list[str] = field(default_factory=list)
    profile: str = "canonical"
    presets: list[str] = field(default_factory=lambda: ["aita-like"])
    count: int = 50
    stride: int = 1
    mode: str = metrics.AUTO
    vertex_cap: int = metrics.DEFAULT_VERTEX_CAP
    landmarks: int = metrics.DEFAULT_LANDMARKS
    deltas: list[int] = field(default_factory=lambda: list(dynamics.DELTAS))
    n_bins: int = 10
    binning: str = "width"
    speed_unit: str = "edges"
    depth1_only: bool = False
    vote_window_hours: float | None = None
    fractions: list[float] = field(default_factory=lambda: list(stats.REWIRE_FRACTIONS))
    degree_kind: str = "total"
    seed: int = 0
    workers: int = 1
    output: str = "threadnet-out"

    def validate(self) -> None:
        if self.stride < 1:
            raise UsageError("stride must be >= 1")
        if self.mode not in metrics.MODES:
            raise UsageError(f"mode must be one of {', '.join(metrics.MODES)}")
        if self.vertex_cap < 1 or self.landmarks < 1:
            raise UsageError("vertex-cap and landmarks must be positive")
        if not self.deltas or any(d not in dynamics.DELTAS for d in self.deltas):
            raise UsageError(f"delta values must come from {dynamics.DELTAS}")
        if self.n_bins < 1:
            raise UsageError("bins must be >= 1")
        if self.binning not in ("width", "quantile"):
            raise UsageError("binning must be 'width' or 'quantile'")
        if self.speed_unit not in ("edges", "nodes"):
            raise UsageError("speed-unit must be 'edges' or 'nodes'")
        if self.vote_window_hours is not None and self.vote_window_hours <= 0:
            raise UsageError("vote window must be positive")
        if any(not 0 < f <= 1 for f in self.fractions):
            raise UsageError("rewiring fractions must lie in (0, 1]")
        if self.degree_kind not in ("total", "in", "out"):
            raise UsageError("degree kind must be total, in or out")
        if self.count < 1:
            raise UsageError("count must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")
        for p in self.presets:
            if p not in generator.PRESETS:
                raise UsageError(f"unknown preset {p!r}; choose from {', '.join(sorted(generator.PRESETS))}")
        if self.profile not in PROFILES and not Path(self.profile).is_file():
            raise UsageError(f"unknown format profile {self.profile!r}")

    def to_text(self) -> str:
        """key = value form; the output directory and worker count are left out
        because they do not affect results."""
        lines = []
        for f in fields(self):
            if f.name in ("output", "workers"):
                continue
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}\n")
        return "".join(lines)


def _format_value(v) -> str:
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def _parse_value(name: str, raw: str, default):
    raw = raw.strip()
    if name == "vote_window_hours":
        return None if raw.lower() in ("", "none") else float(raw)
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, list):
        items = [x.strip() for x in raw.split(",") if x.strip()]
        if name == "deltas":
            return [int(x) for x in items]
        if name == "fractions":
            return [float(x) for x in items]
        return items
    return raw


def load_config(path: str | Path) -> dict:
    """Read a ``key = value`` config file into RunConfig overrides."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from exc
    defaults = RunConfig()
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, raw in parser["run"].items():
        name = key.replace("-", "_")
        if name not in known:
            raise UsageError(f"unknown config key {key!r} in {path}")
        try:
            out[name] = _parse_value(name, raw, getattr(defaults, name))
        except ValueError as exc:
            raise UsageError(f"bad value for {key!r} in {path}: {exc}") from exc
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then the environment, then flags."""
    values = asdict(RunConfig())
    if getattr(args, "config", None):
        values.update(load_config(args.config))
    if os.environ.get(OUTPUT_ENV):
        values["output"] = os.environ[OUTPUT_ENV]
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


# --------------------------------------------------------------------------
# thread store


def store_name(thread_id: str) -> str:
    return quote(thread_id, safe="") + ".jsonl"


def write_store(records: list[ThreadRecord], out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for rec in records:
        p = out / store_name(rec.thread_id)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(serialize_thread(rec))
        paths.append(p)
    return paths


def read_store(path: str | Path) -> tuple[list[ThreadRecord], ParseReport]:
    path = Path(path)
    if not path.is_dir():
        raise DataError(f"no thread store at {path}")
    files = sorted(path.glob("*.jsonl"))
    if not files:
        raise DataError(f"thread store {path} holds no .jsonl files")
    return parse_files(files, "canonical")


# --------------------------------------------------------------------------
# per-thread analysis


@dataclass
class ThreadResult:
    thread_id: str
    files: dict[str, str]
    speeds: dict[int, dynamics.ThreadSpeeds]
    features: dict
    entropy: stats.DisagreementReport
    fit: stats.PowerLawFit | None
    trace: metrics.MetricTrace
    responses: list[dynamics.ResponseTimeSummary]
    user_split: dict[str, int]


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def _user_split(g) -> dict[str, int]:
    entry = g.entry_subgraph()
    out = {f"{s}_{v}": 0 for s in ("star", "periphery") for v in ("voters", "non_voters")}
    for user, where in entry.items():
        voted = any(lab.is_vote for lab in g.vertices[user])
        out[f"{where}_{'voters' if voted else 'non_voters'}"] += 1
    return out


def analyze_thread(record: ThreadRecord, cfg: RunConfig) -> ThreadResult:
    tid = record.thread_id
    g = from_thread(record)
    files: dict[str, str] = {}

    tr = metrics.trace(g, cfg.stride, cfg.mode, cfg.vertex_cap, cfg.landmarks, cfg.seed)
    buf = io.StringIO()
    tr.write_csv(buf)
    files["trace.csv"] = buf.getvalue()

    buf = io.StringIO()
    write_edgelist(g, buf)
    files["edges.tsv"] = buf.getvalue()

    speeds = {}
    rows = []
    for d in cfg.deltas:
        prof = dynamics.thread_speeds(g, d, cfg.speed_unit)
        for name in (dynamics.STAR, dynamics.PERIPHERY, dynamics.WHOLE):
            p = prof[name]
            rows.extend([name, d, i, int(c), repr(float(s))] for i, (c, s) in enumerate(zip(p.counts, p.speeds)))
        speeds[d] = dynamics.ThreadSpeeds(tid, dynamics.duration(g), prof[dynamics.STAR], prof[dynamics.PERIPHERY])
    files["speeds.csv"] = _csv_text(["subgraph", "delta_m", "interval_index", "count", "speed"], rows)

    responses = dynamics.response_times(g)
    files["response_times.csv"] = _csv_text(
        ["subgraph", "vote_class", "n", "mean", "std", "filtered_mean", "n_filtered"],
        [[r.subgraph, r.vote_class, len(r.raw), _num(r.mean), _num(r.std), _num(r.filtered_mean), r.n_filtered] for r in responses],
    )

    votes = vote_labels(record, cfg.depth1_only, cfg.vote_window_hours)
    rep = stats.disagreement_entropy(votes)
    files["entropy.csv"] = _csv_text(
        ["label", "count", "probability"],
        [[lab.value, c, _num(rep.probabilities.get(lab))] for lab, c in rep.counts.items()]
        + [["n_votes", rep.n_votes, ""], ["entropy", _num(rep.entropy), rep.band or ""]],
    )

    try:
        fit = stats.fit_power_law(stats.degree_sample(g.simple_directed(), cfg.degree_kind))
        files["powerlaw.csv"] = _csv_text(
            ["gamma", "xmin", "ks", "p", "n_tail", "n", "status"],
            [[repr(fit.gamma), fit.xmin, repr(fit.ks), repr(fit.p_value), fit.n_tail, fit.n, "ok"]],
        )
    except ValueError as exc:
        fit = None
        files["powerlaw.csv"] = _csv_text(
            ["gamma", "xmin", "ks", "p", "n_tail", "n", "status"], [["", "", "", "", "", "", f"skipped: {exc}"]]
        )

    final = tr.samples[-1] if tr.samples else None
    features = stats.thread_features(record, g, final, votes, cfg.fractions, cfg.seed)
    return ThreadResult(tid, files, speeds, features, rep, fit, tr, responses, _user_split(g))


def _analyze_safe(args):
    record, cfg = args
    try:
        return analyze_thread(record, cfg), None
    except Exception as exc:  # isolate per-thread failures
        return None, (record.thread_id, f"{type(exc).__name__}: {exc}")


# --------------------------------------------------------------------------
# corpus outputs


def _histogram(values, lo, hi, width) -> list[list]:
    n = max(1, int(math.ceil((hi - lo) / width - 1e-9)))
    edges = lo + width * np.arange(n + 1)
    counts, _ = np.histogram(values, bins=edges)
    return [[repr(round(float(edges[i]), 10)), repr(round(float(edges[i + 1]), 10)), int(counts[i])] for i in range(n)]


def corpus_files(results: list[ThreadResult], cfg: RunConfig) -> tuple[dict[str, str], list[str]]:
    files: dict[str, str] = {}
    notes: list[str] = []

    for d in cfg.deltas:
        try:
            bins = dynamics.bin_and_average([r.speeds[d] for r in results], cfg.n_bins, cfg.binning)
        except ValueError as exc:
            notes.append(f"duration bins at delta_m={d} skipped: {exc}")
            continue
        buf = io.StringIO()
        bins.write_summary_csv(buf)
        files[f"bins_d{d}_summary.csv"] = buf.getvalue()
        buf = io.StringIO()
        bins.write_profiles_csv(buf)
        files[f"bins_d{d}_profiles.csv"] = buf.getvalue()

    rows = [r.features for r in results]
    report = stats.correlation_report(rows, cfg.fractions)
    buf = io.StringIO()
    report.write_csv(buf)
    files["correlation.csv"] = buf.getvalue()
    files["correlation.txt"] = report.render()

    ent = [r.entropy.entropy for r in results if r.entropy.entropy is not None]
    files["entropy_hist.csv"] = _csv_text(["lo", "hi", "threads"], _histogram(ent, 0.0, stats.MAX_ENTROPY, 0.1))
    bands = {b: 0 for b in stats.BANDS}
    for r in results:
        if r.entropy.band:
            bands[r.entropy.band] += 1
    files["entropy_bands.csv"] = _csv_text(
        ["band", "threads", "share"],
        [[b, c, repr(c / len(ent)) if ent else ""] for b, c in bands.items()],
    )

    fits = {r.thread_id: r.fit for r in results if r.fit is not None}
    buf = io.StringIO()
    stats.write_fits_csv(fits, buf)
    files["powerlaw_fits.csv"] = buf.getvalue()
    gammas = [f.gamma for f in fits.values()]
    if gammas:
        lo = math.floor(min(gammas) * 10) / 10
        hi = math.floor(max(gammas) * 10) / 10 + 0.1
        files["gamma_hist.csv"] = _csv_text(["lo", "hi", "threads"], _histogram(gammas, lo, hi, 0.1))
    ok = sum(1 for f in fits.values() if f.p_value > 0.001 and f.ks < 0.35)
    files["powerlaw_summary.csv"] = _csv_text(
        ["threads", "fitted", "p_gt_001_and_ks_lt_035"], [[len(results), len(fits), ok]]
    )

    split_keys = ["star_voters", "star_non_voters", "periphery_voters", "periphery_non_voters"]
    split_rows = [[r.thread_id, *(r.user_split[k] for k in split_keys)] for r in results]
    totals = [sum(row[i + 1] for row in split_rows) for i in range(4)]
    files["user_distribution.csv"] = _csv_text(["thread_id", *split_keys], split_rows + [["ALL", *totals]])

    rkeys = ["reciprocity", *(stats.rewired_key(f) for f in cfg.fractions)]
    files["reciprocity.csv"] = _csv_text(
        ["thread_id", "entropy", *rkeys],
        [[r.thread_id, _num(r.features["entropy"]), *(_num(r.features[k]) for k in rkeys)] for r in results],
    )

    traces = [r.trace for r in results]
    cols = {m: metrics.mean_traces(traces, m) for m in ("k", "density", "gcc", "aspl", "diameter")}
    files["mean_trace.csv"] = _csv_text(
        ["step", "mean_k", "density", "gcc", "aspl", "diameter"],
        [[i, *(_num(float(cols[m][i])) for m in ("k", "density", "gcc", "aspl", "diameter"))] for i in range(len(cols["k"]))],
    )

    pooled: dict[tuple[str, str], list[int]] = {}
    for r in results:
        for s in r.responses:
            pooled.setdefault((s.subgraph, s.vote_class), []).extend(s.raw)
    resp_rows = []
    for (sub, cls), vals in sorted(pooled.items()):
        s = dynamics.summarize_response_times(sub, cls, vals)
        resp_rows.append([sub, cls, len(vals), _num(s.mean), _num(s.std), _num(s.filtered_mean), s.n_filtered])
    files["response_times.csv"] = _csv_text(
        ["subgraph", "vote_class", "n", "mean", "std", "filtered_mean", "n_filtered"], resp_rows
    )
    return files, notes


def _write(path: Path, text: str, manifest: dict[str, str], root: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode("utf-8")
    path.write_bytes(data)
    rel = path.relative_to(root).as_posix()
    if rel in manifest:
        raise RuntimeError(f"{rel} written twice")
    manifest[rel] = hashlib.sha256(data).hexdigest()


def _write_manifest(root: Path, manifest: dict[str, str]) -> None:
    lines = "".join(f"{h}  {p}\n" for p, h in sorted(manifest.items()))
    (root / "manifest.txt").write_text(lines, encoding="utf-8")


# --------------------------------------------------------------------------
# subcommands


def cmd_ingest(cfg: RunConfig) -> int:
    if not cfg.inputs:
        raise UsageError("ingest needs at least one input file")
    for p in cfg.inputs:
        if not Path(p).is_file():
            raise DataError(f"no such input file: {p}")
    try:
        profile = get_profile(cfg.profile)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad format profile: {exc}") from exc
    records, report = parse_files(cfg.inputs, profile)
    out = Path(cfg.output)
    write_store(records, out / "threads")
    (out / "parse_report.txt").write_text(report.to_text(), encoding="utf-8")
    sys.stdout.write(report.to_text())
    if not records:
        raise DataError("no valid threads in the input")
    return EXIT_OK


def cmd_generate(cfg: RunConfig) -> int:
    plist = [p for name in cfg.presets for p in generator.PRESETS[name]]
    records = generator.generate_corpus(plist, cfg.count, seed=cfg.seed)
    out = Path(cfg.output)
    write_store(records, out)
    logger.info("wrote %d threads to %s", len(records), out)
    return EXIT_OK


def cmd_analyze(cfg: RunConfig) -> int:
    if len(cfg.inputs) != 1:
        raise UsageError("analyze takes exactly one thread store")
    records, _ = read_store(cfg.inputs[0])
    if not records:
        raise DataError(f"thread store {cfg.inputs[0]} has no valid threads")

    jobs = [(r, cfg) for r in records]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_analyze_safe, jobs, chunksize=4))
    else:
        outcomes = [_analyze_safe(j) for j in jobs]
    results = sorted((r for r, _ in outcomes if r is not None), key=lambda r: r.thread_id)
    failures = sorted(f for _, f in outcomes if f is not None)
    for tid, msg in failures:
        logger.error("thread %s failed: %s", tid, msg)
    if not results:
        raise DataError("every thread failed to analyze")

    root = Path(cfg.output)
    root.mkdir(parents=True, exist_ok=True)
    manifest: dict[str, str] = {}
    _write(root / "config.txt", cfg.to_text(), manifest, root)
    for r in results:
        stem = quote(r.thread_id, safe="")
        for name, text in r.files.items():
            _write(root / "threads" / f"{stem}.{name}", text, manifest, root)
    files, notes = corpus_files(results, cfg)
    for name, text in files.items():
        _write(root / "corpus" / name, text, manifest, root)
    for n in notes:
        logger.warning("%s", n)
    log = [f"failed {tid}: {msg}\n" for tid, msg in failures] + [f"note: {n}\n" for n in notes]
    _write(root / "corpus" / "log.txt", "".join(log), manifest, root)
    _write_manifest(root, manifest)
    logger.info("analyzed %d threads (%d failed) into %s", len(results), len(failures), root)
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    if len(cfg.inputs) < 2:
        raise UsageError("compare needs at least two thread stores")
    delta = cfg.deltas[0]
    tables = []
    for store in cfg.inputs:
        records, _ = read_store(store)
        graphs = [from_thread(r) for r in records]
        try:
            bins = dynamics.bin_and_average(dynamics.corpus_speeds(graphs, delta, cfg.speed_unit), cfg.n_bins, cfg.binning)
        except ValueError as exc:
            raise DataError(f"{store}: {exc}") from exc
        tables.append((Path(store).name or store, bins))

    root = Path(cfg.output)
    root.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    for i, (label, bins) in enumerate(tables):
        part = io.StringIO()
        bins.write_summary_csv(part, label=label)
        text = part.getvalue()
        buf.write(text if i == 0 else text.split("\n", 1)[1])
    (root / "compare.csv").write_text(buf.getvalue(), encoding="utf-8")

    first = tables[0][1]
    lines = [f"{'bin':>3}  " + "  ".join(f"{label[:12]:>12}" for label, _ in tables)]
    for b in range(cfg.n_bins):
        cells = []
        for _, bins in tables:
            r = bins.ratio[b]
            cells.append(f"{'-' if r is None else f'{r:.2f}':>12}")
        lines.append(f"{b:>3}  " + "  ".join(cells))
    for label, bins in tables[1:]:
        wins = sum(1 for a, o in zip(first.ratio, bins.ratio) if a is not None and o is not None and a > o)
        lines.append(f"{tables[0][0]} ratio above {label} in {wins} of {cfg.n_bins} bins")
    text = "\n".join(lines) + "\n"
    (root / "compare.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "generate": cmd_generate, "analyze": cmd_analyze, "compare": cmd_compare}


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file with run settings")
    common.add_argument("-o", "--output", help=f"output directory (env {OUTPUT_ENV} also works)")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    analysis = _Parser(add_help=False)
    analysis.add_argument("--bins", dest="n_bins", type=int, help="duration bins (default 10)")
    analysis.add_argument("--binning", choices=["width", "quantile"])
    analysis.add_argument("--delta", dest="deltas", type=_csv_list(int), help="interval lengths in minutes, e.g. 1,10,60")
    analysis.add_argument("--speed-unit", choices=["edges", "nodes"])

    p = _Parser(prog="threadnet", description="Growing interaction networks of threaded conversations.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", parents=[common], help="parse dumps into a thread store")
    s.add_argument("inputs", nargs="+", help="newline-delimited JSON dumps (.gz ok)")
    s.add_argument("--profile", help=f"{', '.join(PROFILES)} or a profile file")

    s = sub.add_parser("generate", parents=[common], help="write a synthetic thread store")
    s.add_argument("--preset", dest="presets", action="append", choices=sorted(generator.PRESETS))
    s.add_argument("--count", type=int, help="threads per preset parameter set")

    s = sub.add_parser("analyze", parents=[common, analysis], help="per-thread and corpus outputs")
    s.add_argument("inputs", nargs=1, help="thread store directory")
    s.add_argument("--stride", type=int)
    s.add_argument("--mode", choices=list(metrics.MODES))
    s.add_argument("--vertex-cap", type=int)
    s.add_argument("--landmarks", type=int)
    s.add_argument("--depth1-only", action="store_const", const=True, default=None)
    s.add_argument("--vote-window-hours", type=float, help="only count votes this many hours after the post (e.g. 18)")
    s.add_argument("--fractions", type=_csv_list(float), help="rewiring fractions, e.g. 0.2,0.5,0.9")
    s.add_argument("--degree-kind", choices=["total", "in", "out"])
    s.add_argument("--workers", type=int)

    s = sub.add_parser("compare", parents=[common, analysis], help="star/periphery speed ratios across stores")
    s.add_argument("inputs", nargs="+", help="two or more thread store directories")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits on --help and on usage errors
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"threadnet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"threadnet: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
