"""Embedded HTTP service backing the annotation UI.

JSON over HTTP, stdlib server, one process. Label writes are serialized by
the store; reads are snapshots. Endpoints:

* ``GET /runs/next?annotator=&session=&limit=``  next unlabeled successful runs
* ``GET /runs/{id}``                             run view (instruction, paths, media)
* ``POST /labels``                               submit one label
* ``GET /agreement?a=&b=``                       Cohen's kappa between two annotators
* ``GET /export[?partial=1][&format=csv&file=]`` label set export
* ``GET /media/{file}``                          optional sidecar videos
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .labelstore import LabelStore, LabelStoreError
from .model import RunTrace, TraceError
from .quality import run_success
from .stats import StatsError
from .traceio import load_trace

logger = logging.getLogger(__name__)

DEFAULT_BATCH_LIMIT = 160


class RunIndex:
    """Loaded traces plus their oracle verdicts, keyed by run_id."""

    def __init__(self, traces: list[RunTrace], media_dir: str | Path | None = None):
        self.runs: dict[str, RunTrace] = {}
        self.success: dict[str, bool] = {}
        self.media_dir = Path(media_dir) if media_dir else None
        for trace in traces:
            run_id = trace.header.run_id
            if run_id in self.runs:
                raise TraceError(f"duplicate run_id '{run_id}'")
            self.runs[run_id] = trace
            self.success[run_id] = run_success(trace)

    @classmethod
    def from_dir(cls, trace_dir: str | Path, media_dir: str | Path | None = None) -> "RunIndex":
        trace_dir = Path(trace_dir)
        paths = sorted(trace_dir.glob("*.jsonl"))
        if not paths:
            raise TraceError(f"no .jsonl traces found in {trace_dir}")
        return cls([load_trace(p) for p in paths], media_dir=media_dir)

    def successful_ids(self) -> list[str]:
        return sorted(r for r, ok in self.success.items() if ok)

    def media_path(self, run_id: str) -> Path | None:
        if self.media_dir is None:
            return None
        candidate = self.media_dir / f"{run_id}.mp4"
        return candidate if candidate.is_file() else None

    def run_view(self, run_id: str) -> dict:
        trace = self.runs[run_id]
        tcp = trace.tcp_positions()
        objects = {}
        for obj in trace.header.objects:
            positions = [
                list(step.object_poses[obj.object_id].position)
                for step in trace.steps
                if obj.object_id in step.object_poses
            ]
            objects[obj.object_id] = {
                "role": obj.object_role.value,
                "half_extents": list(obj.effective_half_extents()),
                "positions": positions,
            }
        return {
            "run_id": run_id,
            "task": trace.header.task.value,
            "instruction": trace.header.instruction,
            "steps": len(trace),
            "dt": trace.header.dt,
            "media_url": f"/media/{run_id}.mp4" if self.media_path(run_id) else None,
            "tcp": tcp.tolist() if tcp is not None else None,
            "objects": objects,
        }


class LabelService:
    """Request-independent service logic, shared by the HTTP layer and tests."""

    def __init__(
        self,
        index: RunIndex,
        store: LabelStore,
        batch_limit: int = DEFAULT_BATCH_LIMIT,
    ):
        self.index = index
        self.store = store
        self.batch_limit = batch_limit

    def next_batch(self, annotator_id: str, session_id: str, limit: int | None = None) -> dict:
        cap = self.batch_limit if limit is None else limit
        done_in_session = self.store.session_count(annotator_id, session_id)
        remaining = max(0, cap - done_in_session)
        seen = self.store.runs_labeled_by(annotator_id)
        pending = [r for r in self.index.successful_ids() if r not in seen]
        batch = [
            {
                "run_id": run_id,
                "task": self.index.runs[run_id].header.task.value,
                "instruction": self.index.runs[run_id].header.instruction,
            }
            for run_id in pending[:remaining]
        ]
        return {
            "runs": batch,
            "session_done": done_in_session,
            "session_cap": cap,
            "total_pending": len(pending),
        }

    def submit_label(self, payload: dict) -> dict:
        for key in ("run_id", "annotator_id", "label"):
            if not payload.get(key):
                raise LabelStoreError(f"missing field '{key}'")
        run_id = payload["run_id"]
        if run_id not in self.index.runs:
            raise KeyError(f"unknown run '{run_id}'")
        if not self.index.success[run_id]:
            raise LabelStoreError(
                f"run '{run_id}' is not oracle-successful and cannot be labeled"
            )
        return self.store.submit(
            run_id=run_id,
            annotator_id=payload["annotator_id"],
            label=payload["label"],
            session_id=payload.get("session_id", ""),
        )

    def agreement(self, a: str, b: str) -> dict:
        result = self.store.agreement(a, b)
        return {
            "annotator_a": a,
            "annotator_b": b,
            "kappa": result.kappa,
            "observed_agreement": result.observed_agreement,
            "n_items": result.n_items,
            "disagreements": self.store.disagreements(a, b),
        }

    def export_json(self, partial: bool = False) -> dict:
        resolved, unresolved = self.store.resolutions()
        if unresolved and not partial:
            raise LabelStoreError(
                "unresolved disagreements for runs: " + ", ".join(unresolved)
            )
        return {
            "labels": [
                {
                    "run_id": e.run_id,
                    "annotator_id": e.annotator_id,
                    "label": e.label,
                    "timestamp": e.timestamp,
                    "session_id": e.session_id,
                }
                for e in sorted(
                    self.store.effective_labels(), key=lambda e: (e.run_id, e.annotator_id)
                )
            ],
            "resolutions": {
                run_id: {"label": res.label, "resolver_id": res.resolver_id}
                for run_id, res in sorted(resolved.items())
            },
            "unresolved": unresolved,
        }

    def export_csv(self, which: str, partial: bool = False) -> str:
        data = self.export_json(partial=partial)
        lines = []
        if which == "labels":
            lines.append("run_id,annotator_id,label,timestamp,session_id")
            for e in data["labels"]:
                lines.append(
                    f"{e['run_id']},{e['annotator_id']},{e['label']},"
                    f"{e['timestamp']},{e['session_id']}"
                )
        elif which == "resolved":
            lines.append("run_id,label,resolver_id")
            for run_id, res in data["resolutions"].items():
                lines.append(f"{run_id},{res['label']},{res['resolver_id'] or ''}")
        else:
            raise LabelStoreError(f"unknown export file '{which}'")
        return "\n".join(lines) + "\n"


def _make_handler(service: LabelService, ui_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # route through logging, not stderr
            logger.debug("%s %s", self.address_string(), fmt % args)

        def _send(self, code: int, body: bytes, content_type: str = "application/json") -> None:
            self.send_response(code)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def _json(self, code: int, payload: dict) -> None:
            self._send(code, json.dumps(payload).encode("utf-8"))

        def _error(self, code: int, message: str, **extra) -> None:
            self._json(code, {"error": message, **extra})

        def do_OPTIONS(self):  # noqa: N802
            self._send(204, b"")

        def do_GET(self):  # noqa: N802
            url = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(url.query).items()}
            try:
                if url.path == "/runs/next":
                    annotator = query.get("annotator", "")
                    if not annotator:
                        return self._error(400, "annotator query parameter required")
                    limit = int(query["limit"]) if "limit" in query else None
                    return self._json(
                        200,
                        service.next_batch(annotator, query.get("session", ""), limit),
                    )
                if url.path.startswith("/runs/"):
                    run_id = url.path[len("/runs/"):]
                    if run_id not in service.index.runs:
                        return self._error(404, f"unknown run '{run_id}'")
                    return self._json(200, service.index.run_view(run_id))
                if url.path == "/agreement":
                    a, b = query.get("a", ""), query.get("b", "")
                    if not a or not b:
                        return self._error(400, "query parameters a and b required")
                    try:
                        return self._json(200, service.agreement(a, b))
                    except StatsError as exc:
                        return self._error(409, str(exc))
                if url.path == "/export":
                    partial = query.get("partial", "") in ("1", "true")
                    try:
                        if query.get("format") == "csv":
                            body = service.export_csv(
                                query.get("file", "labels"), partial=partial
                            )
                            return self._send(200, body.encode("utf-8"), "text/csv")
                        return self._json(200, service.export_json(partial=partial))
                    except LabelStoreError as exc:
                        _, unresolved = service.store.resolutions()
                        return self._error(409, str(exc), unresolved=unresolved)
                if url.path.startswith("/media/"):
                    media = service.index.media_dir
                    name = Path(url.path[len("/media/"):]).name  # no traversal
                    candidate = (media / name) if media else None
                    if candidate is None or not candidate.is_file():
                        return self._error(404, "no media for this run")
                    data = candidate.read_bytes()
                    return self._send(200, data, "video/mp4")
                if ui_dir is not None:
                    name = "index.html" if url.path == "/" else Path(url.path).name
                    candidate = ui_dir / name
                    if candidate.is_file():
                        ctype = {
                            ".html": "text/html",
                            ".js": "text/javascript",
                            ".css": "text/css",
                        }.get(candidate.suffix, "application/octet-stream")
                        return self._send(200, candidate.read_bytes(), ctype)
                return self._error(404, f"no route for {url.path}")
            except Exception as exc:  # pragma: no cover - last-resort guard
                logger.exception("request failed")
                return self._error(500, str(exc))

        def do_POST(self):  # noqa: N802
            url = urlparse(self.path)
            if url.path != "/labels":
                return self._error(404, f"no route for {url.path}")
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError) as exc:
                return self._error(400, f"bad JSON body: {exc}")
            try:
                return self._json(200, service.submit_label(payload))
            except KeyError as exc:
                return self._error(404, str(exc.args[0]))
            except LabelStoreError as exc:
                return self._error(400, str(exc))

    return Handler


class ServiceServer:
    """Owns the HTTP server thread; usable as a context manager in tests."""

    def __init__(
        self,
        service: LabelService,
        host: str = "127.0.0.1",
        port: int = 0,
        ui_dir: str | Path | None = None,
    ):
        handler = _make_handler(service, Path(ui_dir) if ui_dir else None)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self) -> "ServiceServer":
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "ServiceServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def serve_forever(self) -> None:
        try:
            self.httpd.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self.httpd.server_close()
