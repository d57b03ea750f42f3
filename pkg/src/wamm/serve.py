"""JSON-over-HTTP classification service.

Endpoints: ``POST /classify``, ``POST /classify_batch``, ``GET /health`` and
``GET /metrics``. The model is loaded once and shared read-only by every
handler thread; classification concurrency is bounded by ``workers`` while
health checks bypass that limit.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources

import numpy as np

from .gbdt import GbdtModel
from .model_io import load_model

log = logging.getLogger(__name__)

BATCH_LIMIT = 1000
SCHEMA_VERSION = "wamm-service/1"
_MAX_BODY = 64 * 1024 * 1024


def service_schema() -> dict:
    text = resources.files("wamm").joinpath("data/service_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


class LatencyWindow:
    """Thread-safe request counter with a bounded window of latencies."""

    def __init__(self, maxlen: int = 100_000):
        self._lock = threading.Lock()
        self._lat = deque(maxlen=maxlen)
        self.count = 0

    def record(self, latency_us: float, n: int = 1) -> None:
        with self._lock:
            self.count += n
            self._lat.append(latency_us)

    def snapshot(self) -> dict:
        with self._lock:
            count = self.count
            lat = np.fromiter(self._lat, dtype=np.float64, count=len(self._lat))
        if lat.size == 0:
            return {"requests": count, "p50_us": None, "p99_us": None, "window": 0}
        return {"requests": count, "p50_us": float(np.percentile(lat, 50)),
                "p99_us": float(np.percentile(lat, 99)), "window": int(lat.size)}


class Classifier:
    """The immutable serving state: model plus its featurizer."""

    def __init__(self, model: GbdtModel):
        if model.vectorizer is None:
            raise ValueError("model file carries no vectorizer; it cannot classify raw requests")
        self.model = model
        self.pipeline = model.pipeline
        self.classify("GET / HTTP/1.1")  # compile/load the kernels before the first real request

    def classify(self, text: str) -> dict:
        t0 = time.perf_counter_ns()
        p = self.model.predict_proba(self.pipeline.featurize(text))
        i = int(np.argmax(p))
        elapsed = (time.perf_counter_ns() - t0) / 1000.0
        cls = self.model.classes[i]
        return {
            "class": cls.value,
            "capec_id": cls.capec_id,
            "confidence": float(p[i]),
            "blocked": cls.is_attack,
            "latency_us": elapsed,
        }


class _HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


class WammServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, classifier: Classifier, workers: int = 4):
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.classifier = classifier
        self.gate = threading.BoundedSemaphore(workers)
        self.stats = LatencyWindow()
        self.started = time.monotonic()
        super().__init__(address, _Handler)


class _Handler(BaseHTTPRequestHandler):
    server: WammServer
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, body) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        if status >= 400:
            # the body may be unread, so the stream cannot be reused
            self.send_header("Connection", "close")
            self.close_connection = True
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        srv = self.server
        if self.path == "/health":
            v = srv.classifier.model.format_version
            self._send(200, {
                "status": "ok",
                "format_version": f"{v[0]}.{v[1]}",
                "schema_version": SCHEMA_VERSION,
                "classes": [c.value for c in srv.classifier.model.classes],
                "uptime_s": time.monotonic() - srv.started,
            })
        elif self.path == "/metrics":
            self._send(200, srv.stats.snapshot())
        else:
            self._send(404, {"error": "not found"})

    def _json_body(self):
        ctype = self.headers.get("Content-Type", "")
        if ctype.split(";")[0].strip().lower() != "application/json":
            raise _HttpError(415, "content-type must be application/json")
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            raise _HttpError(400, "invalid Content-Length") from None
        if length < 0 or length > _MAX_BODY:
            raise _HttpError(413, "request body too large")
        raw = self.rfile.read(length)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise _HttpError(400, f"malformed JSON: {exc}") from None

    @staticmethod
    def _text_of(item) -> str:
        if not isinstance(item, dict) or "full_request" not in item:
            raise _HttpError(422, "missing field 'full_request'")
        text = item["full_request"]
        if not isinstance(text, str):
            raise _HttpError(422, "'full_request' must be a string")
        return text

    def do_POST(self):
        srv = self.server
        try:
            if self.path not in ("/classify", "/classify_batch"):
                raise _HttpError(404, "not found")
            body = self._json_body()
            if self.path == "/classify":
                texts = [self._text_of(body)]
            else:
                if not isinstance(body, list):
                    raise _HttpError(422, "batch body must be a JSON array")
                if len(body) > BATCH_LIMIT:
                    raise _HttpError(413, f"batch holds {len(body)} items; the limit is {BATCH_LIMIT}")
                texts = [self._text_of(item) for item in body]
            t0 = time.perf_counter_ns()
            with srv.gate:
                results = [srv.classifier.classify(t) for t in texts]
            srv.stats.record((time.perf_counter_ns() - t0) / 1000.0, len(texts))
        except _HttpError as exc:
            self._send(exc.status, {"error": str(exc)})
            return
        if self.path == "/classify":
            self._send(200, results[0])
        else:
            self._send(200, {"results": results, "count": len(results)})


def parse_bind(bind: str) -> tuple[str, int]:
    host, sep, port = bind.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"bind address must look like host:port, got {bind!r}")
    return host or "127.0.0.1", int(port)


def make_server(model_path, bind: str = "127.0.0.1:8080", workers: int = 4) -> WammServer:
    """Load the model (failing fast on a bad file) and bind the server."""
    classifier = Classifier(load_model(model_path))
    return WammServer(parse_bind(bind), classifier, workers)


def serve(model_path, bind: str = "127.0.0.1:8080", workers: int = 4) -> None:
    server = make_server(model_path, bind, workers)
    host, port = server.server_address[:2]
    log.info("serving %s on %s:%d with %d workers", model_path, host, port, workers)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
