"""Command-line interface.

Subcommands: ``synth`` (generate traces), ``metrics`` (per-run metric files
plus a summaries file), ``analyze`` (study tables from summaries + labels),
``bench`` (per-metric overhead), ``serve`` (label service).

Configuration precedence is flags > ``VLAJ_*`` environment variables >
defaults. Exit codes: 0 success, 1 partial failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import report as report_mod
from .backend import active_backend_name, available_backends, get_backend
from .labelstore import LabelStore, LabelStoreError, load_final_labels
from .labelservice import LabelService, RunIndex, ServiceServer
from .model import TraceError
from .quality import compute_all_series, run_success
from .series import RunSummary
from .synth import Profile, generate_synthetic
from .traceio import load_trace, write_trace
from .model import Task

logger = logging.getLogger(__name__)

MIN_WINDOW = 4
ENV_PREFIX = "VLAJ_"


def _env(name: str, fallback):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    if isinstance(fallback, int):
        return int(raw)
    return raw


def _resolve(flag_value, env_name: str, default):
    if flag_value is not None:
        return flag_value
    return _env(env_name, default)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


def _emit_table(table: dict, out_dir: Path, stem: str, fmt: str) -> Path:
    if fmt == "json":
        path = out_dir / f"{stem}.json"
        _write_json(path, table)
    elif fmt == "csv":
        path = out_dir / f"{stem}.csv"
        path.write_text(report_mod.render_csv(table), encoding="utf-8")
    else:
        path = out_dir / f"{stem}.txt"
        path.write_text(report_mod.render_text(table), encoding="utf-8")
    return path


def _metrics_payload(
    path_str: str, window: int, ev_samples_expected: int = 4
) -> tuple[str, dict, dict]:
    """Worker for cmd_metrics: (run_id, metrics file payload, summary dict)."""
    trace = load_trace(path_str)
    if trace.header.ev_samples and trace.header.ev_samples != ev_samples_expected:
        logger.warning(
            "run %s records %d inference samples per step, expected %d",
            trace.header.run_id, trace.header.ev_samples, ev_samples_expected,
        )
    series, ti_value, notes = compute_all_series(trace)
    summary = RunSummary(
        run_id=trace.header.run_id,
        task=trace.header.task.value,
        model=trace.header.model,
        success=run_success(trace),
        per_metric_mean={k: s.mean() for k, s in series.items()},
        ti=ti_value,
        notes=notes,
    )
    payload = {
        "schema_version": report_mod.SCHEMA_VERSION,
        "run_id": trace.header.run_id,
        "task": trace.header.task.value,
        "model": trace.header.model,
        "window": window,
        "success": summary.success,
        "ti": ti_value,
        "series": {k: s.to_json_dict() for k, s in series.items()},
        "notes": notes,
    }
    return trace.header.run_id, payload, summary.to_json_dict()


def cmd_metrics(args) -> int:
    out_dir = Path(_resolve(args.output_dir, "OUTPUT_DIR", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    window = _resolve(args.window, "WINDOW", 8)
    if window < MIN_WINDOW:
        print(f"error: --window must be >= {MIN_WINDOW}", file=sys.stderr)
        return 2
    jobs = _resolve(args.jobs, "JOBS", 1)
    ev_expected = _resolve(args.ev_samples, "EV_SAMPLES", 4)

    paths = [str(p) for p in args.traces]
    results: list[tuple[str, dict, dict]] = []
    failures: list[tuple[str, str]] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(_metrics_payload, p, window, ev_expected): p for p in paths
            }
            for future, p in futures.items():
                try:
                    results.append(future.result())
                except (TraceError, OSError) as exc:
                    failures.append((p, str(exc)))
    else:
        for p in paths:
            try:
                results.append(_metrics_payload(p, window, ev_expected))
            except (TraceError, OSError) as exc:
                failures.append((p, str(exc)))

    results.sort(key=lambda r: r[0])
    summaries = []
    for run_id, payload, summary in results:
        safe = run_id.replace(os.sep, "_")
        _write_json(out_dir / f"{safe}.metrics.json", payload)
        summaries.append(summary)
    _write_json(
        out_dir / "summaries.json",
        {"schema_version": report_mod.SCHEMA_VERSION, "summaries": summaries},
    )
    print(f"wrote {len(results)} metric files + summaries.json to {out_dir}")
    for path, message in failures:
        print(f"error: {path}: {message}", file=sys.stderr)
    return 1 if failures else 0


def _load_summaries(path: Path) -> list[RunSummary]:
    payload = json.loads(path.read_text(encoding="utf-8"))
    return [RunSummary.from_json_dict(rec) for rec in payload["summaries"]]


def cmd_analyze(args) -> int:
    fmt = _resolve(args.format, "FORMAT", "text")
    out_dir = Path(_resolve(args.output_dir, "OUTPUT_DIR", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        runs = _load_summaries(Path(args.summaries))
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: cannot read summaries: {exc}", file=sys.stderr)
        return 2

    labels: dict[str, str] = {}
    if args.labels:
        try:
            labels = load_final_labels(args.labels)
        except (OSError, LabelStoreError) as exc:
            print(f"error: cannot read labels: {exc}", file=sys.stderr)
            return 2
        known = {r.run_id for r in runs}
        orphans = sorted(set(labels) - known)
        for run_id in orphans:
            logger.warning("label for unknown run '%s' ignored", run_id)
            del labels[run_id]
        if orphans and not labels:
            print("error: no label matches any summarized run", file=sys.stderr)
            return 2

    dataset = report_mod.StudyDataset(runs=runs, labels=labels)
    written = [_emit_table(report_mod.quality_breakdown(dataset), out_dir, "breakdown", fmt)]
    if labels:
        written.append(
            _emit_table(report_mod.correlation_table(dataset), out_dir, "correlation", fmt)
        )
        written.append(
            _emit_table(
                report_mod.discrimination_table(dataset), out_dir, "discrimination", fmt
            )
        )
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


def cmd_bench(args) -> int:
    fmt = _resolve(args.format, "FORMAT", "text")
    out_dir = Path(_resolve(args.output_dir, "OUTPUT_DIR", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    window = _resolve(args.window, "WINDOW", 8)
    repetitions = _resolve(args.repetitions, "REPETITIONS", 5)
    try:
        traces = [load_trace(p) for p in args.traces]
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    backends = available_backends() if args.compare_backends else [active_backend_name()]
    try:
        by_backend = {
            name: report_mod.overhead_bench(
                traces, repetitions=repetitions, window=window, backend=get_backend(name)
            )
            for name in backends
        }
    except report_mod.ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    table = report_mod.overhead_table(by_backend, report_mod.machine_info(backends[0]))
    path = _emit_table(table, out_dir, "overhead", fmt)
    print(report_mod.render_text(table))
    print(f"wrote {path}")
    return 0


def cmd_serve(args) -> int:
    host, _, port_str = args.bind.partition(":")
    try:
        port = int(port_str) if port_str else 8080
    except ValueError:
        print(f"error: bad bind address '{args.bind}'", file=sys.stderr)
        return 2
    try:
        index = RunIndex.from_dir(args.trace_dir, media_dir=args.media_dir)
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    store = LabelStore(args.labels_log)
    batch_limit = _resolve(args.batch_limit, "BATCH_LIMIT", 160)
    service = LabelService(index, store, batch_limit=batch_limit)
    try:
        server = ServiceServer(service, host=host or "127.0.0.1", port=port, ui_dir=args.ui_dir)
    except OSError as exc:
        print(f"error: cannot bind {args.bind}: {exc}", file=sys.stderr)
        return 1
    print(f"serving {len(index.runs)} runs ({len(index.successful_ids())} successful) "
          f"on {server.url}")
    server.serve_forever()
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(_resolve(args.output_dir, "OUTPUT_DIR", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _resolve(args.seed, "SEED", 0)
    written = []
    for i in range(args.count):
        trace = generate_synthetic(
            args.profile,
            args.task,
            seed=seed + i,
            steps=args.steps,
            vocab_size=args.vocab_size,
            include_tokens=not args.no_tokens,
            include_ev=not args.no_ev,
            model=args.model,
        )
        path = out_dir / f"{trace.header.run_id}.jsonl"
        write_trace(trace, path)
        written.append(path)
    print(f"wrote {len(written)} traces to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlameter",
        description="Uncertainty and quality metrics over robot-manipulation traces",
    )
    parser.add_argument(
        "--version", action="version", version="%(prog)s 0.1.0"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="compute per-run metric files and a summaries file")
    p.add_argument("traces", nargs="+", help="trace .jsonl files")
    p.add_argument("--window", type=int, default=None,
                   help="streaming window in steps (>= 4, default 8)")
    p.add_argument("--jobs", type=int, default=None, help="parallel workers (default 1)")
    p.add_argument("--ev-samples", type=int, default=None,
                   help="expected inference samples per step (default 4; mismatch warns)")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("analyze", help="build study tables from summaries and labels")
    p.add_argument("summaries", help="summaries.json from the metrics command")
    p.add_argument("--labels", default=None, help="CSV with final labels (run_id,label)")
    p.add_argument("--format", choices=("text", "csv", "json"), default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bench", help="measure per-step overhead of each metric group")
    p.add_argument("traces", nargs="+")
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--compare-backends", action="store_true",
                   help="benchmark every available kernel backend")
    p.add_argument("--format", choices=("text", "csv", "json"), default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the annotation label service")
    p.add_argument("trace_dir", help="directory of .jsonl traces")
    p.add_argument("--labels-log", default="labels.log.jsonl")
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.add_argument("--batch-limit", type=int, default=None,
                   help="labels per session (default 160)")
    p.add_argument("--media-dir", default=None, help="directory of <run_id>.mp4 videos")
    p.add_argument("--ui-dir", default=None, help="static annotation UI to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate synthetic traces")
    p.add_argument("profile", choices=[pr.value for pr in Profile])
    p.add_argument("task", choices=[t.value for t in Task])
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--vocab-size", type=int, default=32064)
    p.add_argument("--no-tokens", action="store_true")
    p.add_argument("--no-ev", action="store_true")
    p.add_argument("--model", default="synthetic")
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
