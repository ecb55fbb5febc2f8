"""JSON scoring endpoint over a loaded model.

``POST /score`` takes ``{"url": ..., "html": ..., "fetch": false, "verbose": false}``
or ``{"features": [48 numbers]}``; ``GET /health`` reports the loaded model.
Requests are handled on threads; the model is never mutated after loading.
"""
from __future__ import annotations

import json
import logging
import signal
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .features import FeatureVector, FetchError, ParseError, extract, fetch_page
from .models import TrainedModel, predict_proba
from .schema import FEATURE_NAMES, N_FEATURES

log = logging.getLogger(__name__)

MAX_BODY = 2 * 1024 * 1024
THRESHOLD = 0.5


class RequestError(ValueError):
    """Malformed request body (HTTP 400)."""


class ExtractionError(ValueError):
    """The URL or page could not be turned into features (HTTP 422).

    ``category`` is ``"parse"`` for bad URLs and ``"fetch"`` for download failures.
    """

    def __init__(self, message: str, category: str = "parse"):
        super().__init__(message)
        self.category = category


class BindError(OSError):
    pass


def _features_from_row(row) -> FeatureVector:
    if not isinstance(row, (list, tuple)) or len(row) != N_FEATURES:
        raise RequestError(f"'features' must be a list of {N_FEATURES} numbers")
    try:
        vals = [float(v) for v in row]
    except (TypeError, ValueError):
        raise RequestError("'features' must contain only numbers") from None
    if not all(np.isfinite(vals)):
        raise RequestError("'features' must be finite")
    return FeatureVector(dict(zip(FEATURE_NAMES, vals)))


def build_vector(url: str, html: str | None = None, fetch: bool = False, brands=(),
                 fetcher=fetch_page) -> FeatureVector:
    """URL text (plus optional HTML, or a live fetch) to a feature vector."""
    try:
        if fetch and html is None:
            return extract(url, brands=brands, page=fetcher(url))
        return extract(url, html=html, brands=brands)
    except ParseError as exc:
        raise ExtractionError(str(exc)) from None
    except FetchError as exc:
        raise ExtractionError(str(exc), "fetch") from None


def score_vector(model: TrainedModel, fv: FeatureVector) -> tuple[float, int]:
    p = float(predict_proba(model, fv)[0])
    return p, int(p >= THRESHOLD)


def score(model: TrainedModel, request, brands=(), fetcher=fetch_page) -> dict:
    """Validate one decoded JSON request and score it."""
    if not isinstance(request, dict):
        raise RequestError("request body must be a JSON object")
    verbose = request.get("verbose", False)
    fetch = request.get("fetch", False)
    if not isinstance(verbose, bool) or not isinstance(fetch, bool):
        raise RequestError("'verbose' and 'fetch' must be booleans")
    if "features" in request:
        fv = _features_from_row(request["features"])
    else:
        url, html = request.get("url"), request.get("html")
        if not isinstance(url, str) or not url:
            raise RequestError("'url' (non-empty string) or 'features' is required")
        if html is not None and not isinstance(html, str):
            raise RequestError("'html' must be a string")
        fv = build_vector(url, html, fetch, brands, fetcher)
    p, label = score_vector(model, fv)
    out = {"probability": p, "label": label, "model_kind": model.kind,
           "schema_fingerprint": model.fingerprint}
    if verbose:
        out["features"] = dict(fv.values)
        out["provenance"] = dict(fv.provenance)
    return out


class _Handler(BaseHTTPRequestHandler):
    server_version = "phishbench"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.debug("%s " + fmt, self.address_string(), *args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path != "/health":
            return self._send(404, {"error": f"no route {self.path}"})
        m = self.server.model
        self._send(200, {"status": "ok", "model_kind": m.kind, "schema_fingerprint": m.fingerprint})

    def do_POST(self):
        if self.path != "/score":
            return self._send(404, {"error": f"no route {self.path}"})
        ctype = self.headers.get("Content-Type", "").split(";")[0].strip().lower()
        if ctype != "application/json":
            return self._send(415, {"error": "Content-Type must be application/json"})
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            return self._send(411, {"error": "Content-Length required"})
        if length > MAX_BODY:
            self.close_connection = True
            return self._send(413, {"error": f"body exceeds {MAX_BODY} bytes"})
        raw = self.rfile.read(length)
        self.server.count()
        try:
            try:
                request = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise RequestError(f"invalid JSON: {exc}") from None
            result = score(self.server.model, request, self.server.brands)
        except RequestError as exc:
            return self._send(400, {"error": str(exc)})
        except ExtractionError as exc:
            return self._send(422, {"error": str(exc)})
        except Exception as exc:
            log.exception("scoring failed")
            return self._send(500, {"error": f"internal error: {type(exc).__name__}"})
        self._send(200, result)


class ScoringServer(ThreadingHTTPServer):
    daemon_threads = False
    block_on_close = True     # server_close() waits for in-flight requests

    def __init__(self, address, model: TrainedModel, brands=()):
        self.model = model
        self.brands = tuple(brands)
        self.requests_served = 0
        self._lock = threading.Lock()
        try:
            super().__init__(address, _Handler)
        except OSError as exc:
            raise BindError(exc.errno, f"cannot bind {address[0]}:{address[1]}: {exc.strerror}") from None

    def count(self) -> None:
        with self._lock:
            self.requests_served += 1


def make_server(model: TrainedModel, host: str = "127.0.0.1", port: int = 8000, brands=()) -> ScoringServer:
    return ScoringServer((host, port), model, brands)


def run(model: TrainedModel, host: str = "127.0.0.1", port: int = 8000, brands=(), ready=None) -> None:
    """Serve until SIGINT/SIGTERM, then drain in-flight requests and return."""
    server = make_server(model, host, port, brands)

    def stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    old = {sig: signal.signal(sig, stop) for sig in (signal.SIGINT, signal.SIGTERM)}
    try:
        if ready is not None:
            ready(server)
        server.serve_forever()
    finally:
        server.server_close()
        for sig, handler in old.items():
            signal.signal(sig, handler)
