"""HTTP API for driving the pipeline and the review station.

All bodies are JSON; see API.md for the exact field names. Mutating
endpoints accept idempotency keys so clients can retry safely. Jobs
submitted over HTTP run on a small worker pool; poll GET /jobs/{id}.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import urlparse

from ..errors import (
    AlreadyDecided,
    CurationError,
    InvalidParams,
    MissingEditedText,
    UnknownRecord,
    UnknownReviewItem,
)
from .jobs import Pipeline
from .store import Job, ReviewDecision, ReviewItem, job_fingerprint

logger = logging.getLogger(__name__)


def job_payload(job: Job) -> dict:
    return {
        "job_id": job.job_id,
        "kind": job.kind,
        "state": job.state,
        "progress": {"done": job.done, "total": job.total},
        "error": job.error,
        "params": job.params,
    }


def item_payload(item: ReviewItem, queue_depth: int) -> dict:
    return {
        "item_id": item.item_id,
        "record_id": item.record_id,
        "proposed_text": item.proposed_text,
        "provenance": list(item.provenance),
        "reason": item.reason,
        "state": item.state,
        "edited_text": item.edited_text,
        "image_url": f"/images/{item.record_id}",
        "queue_depth": queue_depth,
    }


class ApiServer:
    def __init__(self, pipeline: Pipeline, *, workers: int = 2):
        self.pipeline = pipeline
        self._executor = ThreadPoolExecutor(max_workers=workers)
        self._submit_lock = threading.Lock()
        self._inflight: set[str] = set()
        self._httpd: Optional[ThreadingHTTPServer] = None

    # --- handlers ----------------------------------------------------------

    def submit_job(self, kind: str, params: dict) -> Job:
        from .jobs import JOB_KINDS

        if kind not in JOB_KINDS:
            raise InvalidParams(f"unknown job kind: {kind!r}")
        job_id = job_fingerprint(kind, params)
        with self._submit_lock:
            existing = self.pipeline.store.job(job_id)
            if existing is not None and (existing.state == "done" or job_id in self._inflight):
                return existing
            job = Job(job_id=job_id, kind=kind, params=params, state="queued")
            self.pipeline.store.upsert_job(job)
            self._inflight.add(job_id)

        def run():
            try:
                self.pipeline.run_job(kind, params)
            finally:
                with self._submit_lock:
                    self._inflight.discard(job_id)

        self._executor.submit(run)
        return job

    def decide(self, item_id: str, body: dict) -> ReviewItem:
        verdict = body.get("verdict", "")
        decision = ReviewDecision(
            item_id=item_id,
            verdict=verdict,
            edited_text=body.get("edited_text"),
            reviewer=body.get("reviewer", ""),
        )
        return self.pipeline.store.apply_decision(decision, body.get("idempotency_key"))

    # --- server lifecycle -----------------------------------------------------

    def make_server(self, host: str, port: int) -> ThreadingHTTPServer:
        api = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                logger.debug("http: " + fmt, *args)

            def _send(self, status: int, payload=None, *, content_type="application/json", raw=None):
                body = raw if raw is not None else json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header(
                    "Access-Control-Allow-Headers", "Content-Type, X-Api-Token"
                )
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
                self.end_headers()
                self.wfile.write(body)

            def _error(self, status: int, code: str, detail: str = ""):
                self._send(status, {"error": code, "detail": detail})

            def _body(self) -> dict:
                length = int(self.headers.get("Content-Length") or 0)
                if not length:
                    return {}
                return json.loads(self.rfile.read(length).decode("utf-8"))

            def _authorized(self) -> bool:
                token = api.pipeline.config.api_token
                if not token:
                    return True
                return self.headers.get("X-Api-Token") == token

            def do_OPTIONS(self):
                self._send(204, raw=b"")

            def do_GET(self):
                if not self._authorized():
                    return self._error(401, "Unauthorized")
                parsed = urlparse(self.path)
                parts = [p for p in parsed.path.split("/") if p]
                try:
                    if parts[:1] == ["jobs"] and len(parts) == 2:
                        job = api.pipeline.store.job(parts[1])
                        if job is None:
                            return self._error(404, "UnknownJob", parts[1])
                        return self._send(200, job_payload(job))
                    if parts == ["review", "next"]:
                        # ?reviewer= is accepted but items are not assigned.
                        item = api.pipeline.store.next_pending_review()
                        if item is None:
                            return self._send(204, raw=b"")
                        depth = api.pipeline.store.pending_review_count()
                        return self._send(200, item_payload(item, depth))
                    if parts == ["stats"]:
                        stats = api.pipeline.current_stats()
                        payload = asdict(stats)
                        payload["review"] = api.pipeline.store.review_counts()
                        return self._send(200, payload)
                    if parts[:1] == ["manifests"] and len(parts) == 2:
                        path = api.pipeline.manifest_path(parts[1])
                        if not path.exists():
                            return self._error(404, "ManifestNotBuilt", parts[1])
                        return self._send(
                            200,
                            raw=path.read_bytes(),
                            content_type="text/tab-separated-values; charset=utf-8",
                        )
                    if parts[:1] == ["images"] and len(parts) == 2:
                        path = api.pipeline.store.image_path(parts[1])
                        if path is None or not path.exists():
                            return self._error(404, "UnknownRecord", parts[1])
                        return self._send(200, raw=path.read_bytes(), content_type="image/png")
                    return self._error(404, "UnknownEndpoint", parsed.path)
                except Exception as exc:  # pragma: no cover - defensive
                    logger.exception("GET %s failed", self.path)
                    return self._error(500, "InternalError", str(exc))

            def do_POST(self):
                if not self._authorized():
                    return self._error(401, "Unauthorized")
                parts = [p for p in urlparse(self.path).path.split("/") if p]
                try:
                    body = self._body()
                except (ValueError, json.JSONDecodeError) as exc:
                    return self._error(400, "BadJson", str(exc))
                try:
                    if parts == ["jobs"]:
                        kind = body.get("kind", "")
                        params = body.get("params") or {}
                        job = api.submit_job(kind, params)
                        return self._send(200, job_payload(job))
                    if parts[:1] == ["review"] and len(parts) == 3 and parts[2] == "decision":
                        item = api.decide(parts[1], body)
                        depth = api.pipeline.store.pending_review_count()
                        return self._send(200, item_payload(item, depth))
                    return self._error(404, "UnknownEndpoint", self.path)
                except AlreadyDecided as exc:
                    return self._error(409, "AlreadyDecided", str(exc))
                except MissingEditedText as exc:
                    return self._error(400, "MissingEditedText", str(exc))
                except (UnknownReviewItem, UnknownRecord) as exc:
                    return self._error(404, type(exc).__name__, str(exc))
                except InvalidParams as exc:
                    return self._error(400, "InvalidParams", str(exc))
                except CurationError as exc:
                    return self._error(400, type(exc).__name__, str(exc))
                except Exception as exc:  # pragma: no cover - defensive
                    logger.exception("POST %s failed", self.path)
                    return self._error(500, "InternalError", str(exc))

        return ThreadingHTTPServer((host, port), Handler)

    def start(self, host: str = "127.0.0.1", port: int = 0) -> int:
        """Start serving on a background thread; returns the bound port."""
        self._httpd = self.make_server(host, port)
        thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        thread.start()
        return self._httpd.server_address[1]

    def serve_forever(self, host: str, port: int):
        self._httpd = self.make_server(host, port)
        logger.info("serving on %s:%d", host, self._httpd.server_address[1])
        try:
            self._httpd.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            self._httpd.shutdown()

    def stop(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        self._executor.shutdown(wait=True)
