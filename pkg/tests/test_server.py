import json
import threading
import time
import urllib.error
import urllib.request

import numpy as np
import pytest

from lgspectra.io_cli import ResultCache, RunConfig, cached_record, export_band_csvs
from lgspectra.server import make_server
from lgspectra.simulate import model_from_spec


@pytest.fixture()
def server(tmp_path):
    srv = make_server(
        host="127.0.0.1", port=0, cache_dir=tmp_path / "cache", sync_r_limit=16,
        workers=1,
    )
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    port = srv.server_address[1]
    yield f"http://127.0.0.1:{port}", tmp_path / "cache"
    srv.shutdown()
    srv.server_close()


def request_json(url, body=None, method=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(
        url, data=data, method=method or ("POST" if body is not None else "GET"),
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


SMALL_BODY = {
    "dataset": "gaussian-wn-demo",
    "point": "50::50",
    "m": 3,
    "p": 1,
    "grid": 32,
    "R": 4,
    "n": 300,
    "seed": 5,
}


class TestDatasets:
    def test_listing(self, server):
        base, _ = server
        status, payload = request_json(f"{base}/api/datasets")
        assert status == 200
        names = {d["name"] for d in payload["datasets"]}
        assert "gaussian-wn-demo" in names
        assert "cosine-demo" in names
        entry = next(d for d in payload["datasets"] if d["name"] == "gaussian-wn-demo")
        assert entry["n"] == 1859
        assert entry["columns"] == ["Y1", "Y2"]


class TestSpectraEndpoint:
    def test_compute_then_cache_hit(self, server):
        base, _ = server
        status1, first = request_json(f"{base}/api/spectra", SMALL_BODY)
        assert status1 == 200
        assert first["cached"] is False
        assert len(first["omega"]) == 32
        assert set(first["local"]["curves"]) == {"co", "quad", "amplitude", "phase"}
        status2, second = request_json(f"{base}/api/spectra", SMALL_BODY)
        assert status2 == 200
        assert second["cached"] is True
        assert second["local"] == first["local"]
        assert second["config_hash"] == first["config_hash"]

    def test_malformed_percentile_field_error(self, server):
        base, _ = server
        body = dict(SMALL_BODY, point="0::50")
        status, payload = request_json(f"{base}/api/spectra", body)
        assert status == 400
        assert "point" in payload["errors"]

    def test_unknown_dataset_404(self, server):
        base, _ = server
        status, payload = request_json(
            f"{base}/api/spectra", dict(SMALL_BODY, dataset="nope")
        )
        assert status == 404
        assert "dataset" in payload["errors"]

    def test_invalid_parameters_field_errors(self, server):
        base, _ = server
        body = dict(SMALL_BODY, m=0, R=1)
        status, payload = request_json(f"{base}/api/spectra", body)
        assert status == 400
        assert "m" in payload["errors"] and "R" in payload["errors"]

    def test_matches_cli_export_byte_for_value(self, server, tmp_path):
        # CLI/server equivalence oracle: same config, shared cache
        base, cache_dir = server
        status, payload = request_json(f"{base}/api/spectra", SMALL_BODY)
        assert status == 200
        config = RunConfig(
            source="model",
            model=model_from_spec("gaussian-wn", {"rho": 0.35}),
            points=("50::50",),
            m=3,
            p=1,
            grid_count=32,
            r=4,
            n=300,
            seed=5,
        )
        assert config.config_hash() == payload["config_hash"]
        record, was_cached = cached_record(config, ResultCache(cache_dir), workers=1)
        assert was_cached  # shared cache: the server's record is reused
        files = export_band_csvs(record, tmp_path / "export")
        co_file = next(p for p in files if p.name.startswith("co_"))
        rows = co_file.read_text().splitlines()[1:]
        co = payload["local"]["curves"]["co"]
        for i, row in enumerate(rows):
            cells = row.split(",")
            assert float(cells[0]) == payload["omega"][i]
            assert float(cells[1]) == co["median"][i]
            assert float(cells[2]) == co["lower"][i]
            assert float(cells[3]) == co["upper"][i]


class TestJobs:
    def test_long_job_flow(self, tmp_path):
        srv = make_server(
            host="127.0.0.1", port=0, cache_dir=tmp_path / "cache", sync_r_limit=0,
            workers=1,
        )
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{srv.server_address[1]}"
        try:
            status, payload = request_json(f"{base}/api/spectra", SMALL_BODY)
            assert status == 202
            token = payload["job"]
            deadline = time.time() + 60
            final = None
            while time.time() < deadline:
                status, payload = request_json(f"{base}/api/jobs/{token}")
                if status == 200:
                    final = payload
                    break
                assert status == 409
                assert payload["status"] == "running"
                assert 0.0 <= payload["progress"] <= 1.0
                time.sleep(0.1)
            assert final is not None, "job did not finish in time"
            assert final["config_hash"] == token
            assert len(final["omega"]) == 32
        finally:
            srv.shutdown()
            srv.server_close()

    def test_unknown_job_404(self, server):
        base, _ = server
        status, payload = request_json(f"{base}/api/jobs/deadbeef")
        assert status == 404


class TestComplexEndpoint:
    def test_summary_at_grid_frequency(self, server):
        base, _ = server
        status, payload = request_json(f"{base}/api/spectra", SMALL_BODY)
        token = payload["config_hash"]
        omega = payload["omega"][5]
        status, summary = request_json(
            f"{base}/api/complex?config={token}&omega={omega!r}"
        )
        assert status == 200
        assert summary["omega"] == omega
        assert len(summary["re"]) == 4
        assert set(summary["summary"]) == {"re", "im", "modulus", "argument"}

    def test_off_grid_rejected(self, server):
        base, _ = server
        status, payload = request_json(f"{base}/api/spectra", SMALL_BODY)
        token = payload["config_hash"]
        status, err = request_json(f"{base}/api/complex?config={token}&omega=0.123456")
        assert status == 400

    def test_unknown_config_404(self, server):
        base, _ = server
        status, err = request_json(f"{base}/api/complex?config=ffff&omega=0.1")
        assert status == 404


class TestCors:
    def test_cors_headers_present(self, server):
        base, _ = server
        req = urllib.request.Request(f"{base}/api/datasets")
        with urllib.request.urlopen(req) as resp:
            assert resp.headers["Access-Control-Allow-Origin"] == "*"

    def test_preflight(self, server):
        base, _ = server
        req = urllib.request.Request(f"{base}/api/spectra", method="OPTIONS")
        with urllib.request.urlopen(req) as resp:
            assert resp.status == 204
            assert resp.headers["Access-Control-Allow-Methods"] == "GET, POST, OPTIONS"


class TestCsvDatasets:
    def test_raw_and_log_return_registration(self, tmp_path):
        rng = np.random.default_rng(31)
        levels = 100 * np.exp(np.cumsum(0.01 * rng.standard_normal((400, 2)), axis=0))
        path = tmp_path / "closes.csv"
        with open(path, "w") as fh:
            fh.write("DAX,CAC\n")
            for row in levels:
                fh.write(f"{float(row[0])!r},{float(row[1])!r}\n")
        srv = make_server(
            host="127.0.0.1",
            port=0,
            cache_dir=tmp_path / "cache",
            csv_datasets={"closes": (str(path), "log-return"), "raw": str(path)},
            workers=1,
        )
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{srv.server_address[1]}"
        try:
            status, listing = request_json(f"{base}/api/datasets")
            entries = {d["name"]: d for d in listing["datasets"]}
            assert entries["closes"]["transform"] == "log-return"
            assert entries["closes"]["n"] == 399
            assert entries["raw"]["transform"] == "raw"
            body = {
                "dataset": "closes", "point": "50::50", "m": 3, "p": 1,
                "grid": 32, "R": 4, "block_len": 50, "seed": 2,
            }
            status, payload = request_json(f"{base}/api/spectra", body)
            assert status == 200
            assert payload["nc"]["r"] == 4
            # block_len is mandatory for csv datasets
            status, err = request_json(
                f"{base}/api/spectra", {k: v for k, v in body.items() if k != "block_len"}
            )
            assert status == 400 and "block_len" in err["errors"]
        finally:
            srv.shutdown()
            srv.server_close()


class TestWarmCacheRestart:
    def test_restarted_server_serves_cached_response(self, tmp_path):
        cache_dir = tmp_path / "cache"
        results = []
        for _ in range(2):
            srv = make_server(host="127.0.0.1", port=0, cache_dir=cache_dir, workers=1)
            thread = threading.Thread(target=srv.serve_forever, daemon=True)
            thread.start()
            base = f"http://127.0.0.1:{srv.server_address[1]}"
            try:
                status, payload = request_json(f"{base}/api/spectra", SMALL_BODY)
                assert status == 200
                results.append(payload)
            finally:
                srv.shutdown()
                srv.server_close()
        assert results[0]["cached"] is False
        assert results[1]["cached"] is True
        assert results[0]["local"] == results[1]["local"]
        assert results[0]["global"] == results[1]["global"]
