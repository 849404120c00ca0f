"""Stateless HTTP JSON API over the estimation pipeline.

Endpoints:

* ``GET /api/datasets`` lists the registered series and demo models.
* ``POST /api/spectra`` computes (or serves from cache) band curves for one
  dataset/point/parameter combination.  Expensive runs return a job token;
  ``GET /api/jobs/{token}`` polls it (409 with progress while running).
* ``GET /api/complex?config=HASH&omega=W`` returns the per-frequency complex
  replicate cloud with polar and Cartesian summaries.

Responses are keyed by the config hash and backed by the shared result
cache, so server answers match CLI exports value for value, and a restart
with a warm cache reproduces every response.  CORS is open for the UI.
"""

from __future__ import annotations

import json
import threading
import traceback
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np

from .inference import _order_index, _wrap, _circular_median
from .io_cli import ResultCache, RunConfig, cached_record, percentile_to_point
from .simulate import model_from_spec
from .timeseries import load_csv


def _demo_datasets() -> dict:
    return {
        "gaussian-wn-demo": {
            "kind": "model",
            "spec": model_from_spec("gaussian-wn", {"rho": 0.35}),
            "n": 1859,
            "columns": ["Y1", "Y2"],
            "transform": "raw",
        },
        "cosine-demo": {
            "kind": "model",
            "spec": model_from_spec("cosine"),
            "n": 1859,
            "columns": ["Y1", "Y2"],
            "transform": "raw",
        },
        "local-trig-a-demo": {
            "kind": "model",
            "spec": model_from_spec("local-trig-a"),
            "n": 1859,
            "columns": ["Y1", "Y2"],
            "transform": "raw",
        },
        "local-trig-c-demo": {
            "kind": "model",
            "spec": model_from_spec("local-trig-c"),
            "n": 1859,
            "columns": ["Y1", "Y2"],
            "transform": "raw",
        },
    }


class AppState:
    def __init__(self, cache_dir=None, csv_datasets=None, sync_r_limit=16, workers=None):
        self.cache = ResultCache(cache_dir)
        self.sync_r_limit = sync_r_limit
        self.workers = workers
        self.datasets = _demo_datasets()
        for name, spec in (csv_datasets or {}).items():
            path, transform = spec if isinstance(spec, tuple) else (spec, "raw")
            if transform not in ("raw", "log-return"):
                raise ValueError(f"dataset {name!r}: unknown transform {transform!r}")
            series = load_csv(path)
            n = series.n - 1 if transform == "log-return" else series.n
            self.datasets[name] = {
                "kind": "csv",
                "path": str(path),
                "n": n,
                "columns": list(series.names),
                "transform": transform,
            }
        self.jobs: dict[str, dict] = {}
        self.lock = threading.Lock()

    # -- request validation ---------------------------------------------------

    def build_config(self, body: dict) -> tuple[RunConfig | None, dict, int]:
        """Validate a request body; returns (config, errors, status)."""
        errors: dict[str, str] = {}
        name = body.get("dataset")
        if not name:
            errors["dataset"] = "required"
            return None, errors, 400
        entry = self.datasets.get(name)
        if entry is None:
            return None, {"dataset": f"unknown dataset {name!r}"}, 404

        def grab(field, default, caster):
            value = body.get(field, default)
            try:
                return caster(value)
            except (TypeError, ValueError) as exc:
                errors[field] = str(exc)
                return default

        point = body.get("point", "50::50")
        try:
            percentile_to_point(point)
        except ValueError as exc:
            errors["point"] = str(exc)
        pair = grab("pair", [0, 1], lambda x: tuple(x))
        b = grab("b", [0.6, 0.6], lambda x: (float(x[0]), float(x[1])))
        m = grab("m", 10, int)
        p = grab("p", 5, int)
        window = grab("window", "tukey-hanning", str)
        grid = grab("grid", 1024, int)
        r = grab("R", 100, int)
        probs = grab("probs", [0.05, 0.95], lambda x: (float(x[0]), float(x[1])))
        seed = grab("seed", 0, int)
        n = grab("n", entry.get("n"), int)
        block_len = body.get("block_len")
        if block_len is not None:
            block_len = grab("block_len", None, int)
        if m < 1:
            errors["m"] = "m must be >= 1"
        if p not in (1, 5):
            errors["p"] = "p must be 1 or 5"
        if r < 2:
            errors["R"] = "R must be >= 2"
        if entry["kind"] == "csv" and block_len is None:
            errors["block_len"] = "required for csv datasets (bootstrap bands)"
        if errors:
            return None, errors, 400
        try:
            if entry["kind"] == "model":
                config = RunConfig(
                    source="model",
                    model=entry["spec"],
                    pair=pair,
                    points=(point,),
                    b=b,
                    m=m,
                    p=p,
                    window=window,
                    grid_count=grid,
                    r=r,
                    probs=probs,
                    n=n,
                    seed=seed,
                )
            else:
                config = RunConfig(
                    source="csv",
                    csv_path=entry["path"],
                    columns=tuple(entry["columns"]),
                    transform=entry["transform"],
                    pair=pair,
                    points=(point,),
                    b=b,
                    m=m,
                    p=p,
                    window=window,
                    grid_count=grid,
                    r=r,
                    probs=probs,
                    block_len=block_len,
                    seed=seed,
                )
        except ValueError as exc:
            return None, {"config": str(exc)}, 400
        return config, {}, 200

    # -- jobs -------------------------------------------------------------------

    def start_job(self, config: RunConfig) -> str:
        token = config.config_hash()
        with self.lock:
            job = self.jobs.get(token)
            if job is not None and job["status"] == "running":
                return token
            self.jobs[token] = {"status": "running", "progress": 0.0}

        def progress(done, total):
            with self.lock:
                if token in self.jobs:
                    self.jobs[token]["progress"] = done / total

        def run():
            try:
                cached_record(config, self.cache, workers=self.workers, progress=progress)
                with self.lock:
                    self.jobs[token] = {"status": "done", "progress": 1.0}
            except Exception as exc:  # surfaced through the job endpoint
                with self.lock:
                    self.jobs[token] = {"status": "error", "error": repr(exc)}

        threading.Thread(target=run, daemon=True).start()
        return token

    def job_status(self, token: str) -> dict | None:
        with self.lock:
            job = self.jobs.get(token)
            return dict(job) if job is not None else None


def _spectra_payload(record: dict, cached: bool) -> dict:
    spec, entry = next(iter(record["points"].items()))
    local = entry["local"]
    global_ = entry["global"]
    return {
        "config_hash": record["config_hash"],
        "cached": cached,
        "config": record["config"],
        "point": spec,
        "omega": local["omega"],
        "probs": local["probs"],
        "local": {
            "curves": local["curves"],
            "phase_branch_cut": local.get("phase_branch_cut"),
        },
        "global": {"curves": global_["curves"]},
        "nc": {
            "r": entry["nc"]["r"],
            "local_flagged": entry["nc"]["local_flagged"],
            "global_flagged": entry["nc"]["global_flagged"],
            "ok": entry["nc"]["local_flagged"] == 0,
        },
    }


def _complex_payload(record: dict, omega: float, probs=(0.05, 0.95)) -> dict | None:
    spec, entry = next(iter(record["points"].items()))
    if "complex" not in entry:
        return None
    grid = np.asarray(entry["local"]["omega"])
    matches = np.nonzero(np.isclose(grid, omega, rtol=0.0, atol=1e-12))[0]
    if len(matches) == 0:
        return None
    j = int(matches[0])
    converged = entry["complex"]["converged"]
    re = [row[j] for row, ok in zip(entry["complex"]["re"], converged) if ok]
    im = [row[j] for row, ok in zip(entry["complex"]["im"], converged) if ok]
    values = np.asarray(re) + 1j * np.asarray(im)
    r = len(values)
    idx = (_order_index(0.5, r), _order_index(probs[0], r), _order_index(probs[1], r))

    def stats(x):
        s = np.sort(x)
        return [float(s[idx[0]]), float(s[idx[1]]), float(s[idx[2]])]

    args = np.angle(values)
    centre = _circular_median(args[:, None])[0]
    d = np.sort(_wrap(args - centre))
    argument = [float(centre + d[i]) for i in idx]
    return {
        "config_hash": record["config_hash"],
        "omega": float(grid[j]),
        "point": spec,
        "re": [float(x) for x in values.real],
        "im": [float(x) for x in values.imag],
        "probs": list(probs),
        "summary": {
            "re": stats(values.real),
            "im": stats(values.imag),
            "modulus": stats(np.abs(values)),
            "argument": argument,
        },
    }


class _Handler(BaseHTTPRequestHandler):
    state: AppState  # assigned by make_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload: dict | None):
        body = b"" if payload is None else json.dumps(payload).encode()
        self.send_response(status)
        if body:
            self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        if body:
            self.wfile.write(body)

    def do_OPTIONS(self):
        self._send(204, None)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/api/datasets":
            listing = [
                {
                    "name": name,
                    "kind": entry["kind"],
                    "n": entry["n"],
                    "columns": entry["columns"],
                    "transform": entry["transform"],
                }
                for name, entry in sorted(self.state.datasets.items())
            ]
            self._send(200, {"datasets": listing})
            return
        if url.path.startswith("/api/jobs/"):
            token = url.path.rsplit("/", 1)[-1]
            record = self.state.cache.get(token)
            job = self.state.job_status(token)
            if record is not None:
                self._send(200, _spectra_payload(record, cached=True))
                return
            if job is None:
                self._send(404, {"error": f"unknown job {token!r}"})
            elif job["status"] == "running":
                self._send(409, {"job": token, "status": "running", "progress": job["progress"]})
            elif job["status"] == "error":
                self._send(500, {"job": token, "status": "error", "error": job["error"]})
            else:
                self._send(500, {"job": token, "status": job["status"]})
            return
        if url.path == "/api/complex":
            params = parse_qs(url.query)
            token = params.get("config", [None])[0]
            omega_raw = params.get("omega", [None])[0]
            if token is None or omega_raw is None:
                self._send(400, {"error": "config and omega query parameters required"})
                return
            try:
                omega = float(omega_raw)
            except ValueError:
                self._send(400, {"error": f"omega={omega_raw!r} is not a number"})
                return
            record = self.state.cache.get(token)
            if record is None:
                self._send(404, {"error": f"no cached result for config {token!r}"})
                return
            payload = _complex_payload(record, omega)
            if payload is None:
                self._send(400, {"error": "omega not on the grid or record lacks replicate values"})
                return
            self._send(200, payload)
            return
        self._send(404, {"error": f"unknown path {url.path!r}"})

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/api/spectra":
            self._send(404, {"error": f"unknown path {url.path!r}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "invalid JSON body"})
            return
        config, errors, status = self.state.build_config(body)
        if config is None:
            self._send(status, {"errors": errors})
            return
        token = config.config_hash()
        record = self.state.cache.get(token)
        if record is not None:
            self._send(200, _spectra_payload(record, cached=True))
            return
        if config.r > self.state.sync_r_limit:
            token = self.state.start_job(config)
            self._send(202, {"job": token, "status": "running"})
            return
        try:
            record, was_cached = cached_record(config, self.state.cache, workers=self.state.workers)
        except Exception:
            self._send(500, {"error": traceback.format_exc(limit=1)})
            return
        self._send(200, _spectra_payload(record, cached=was_cached))


def make_server(
    host: str = "127.0.0.1",
    port: int = 0,
    cache_dir=None,
    csv_datasets=None,
    sync_r_limit: int = 16,
    workers: int | None = None,
) -> ThreadingHTTPServer:
    state = AppState(
        cache_dir=cache_dir,
        csv_datasets=csv_datasets,
        sync_r_limit=sync_r_limit,
        workers=workers,
    )
    handler = type("BoundHandler", (_Handler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(
    host: str = "127.0.0.1",
    port: int = 8572,
    cache_dir=None,
    csv_datasets=None,
    sync_r_limit: int = 16,
    workers: int | None = None,
):
    server = make_server(host, port, cache_dir, csv_datasets, sync_r_limit, workers)
    actual_port = server.server_address[1]
    print(f"lgspectra API listening on http://{host}:{actual_port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
