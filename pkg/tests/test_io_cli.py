import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from lgspectra.io_cli import (
    FIGURE_PRESETS,
    ResultCache,
    RunConfig,
    cached_record,
    compute_bands_record,
    export_band_csvs,
    main,
    parse_config_file,
    percentile_to_point,
    point_label,
)
from lgspectra.simulate import model_from_spec


def small_model_config(**overrides):
    base = dict(
        source="model",
        model=model_from_spec("gaussian-wn", {"rho": 0.3}),
        points=("50::50",),
        b=(0.6, 0.6),
        m=3,
        p=1,
        grid_count=32,
        r=4,
        n=300,
        seed=11,
    )
    base.update(overrides)
    return RunConfig(**base)


class TestPercentileToPoint:
    def test_centre(self):
        p = percentile_to_point("50::50")
        assert (p.v1, p.v2) == (0.0, 0.0)

    def test_tails(self):
        p = percentile_to_point("10::90")
        assert p.v1 == pytest.approx(-1.2815515655446004, abs=1e-12)
        assert p.v2 == pytest.approx(1.2815515655446004, abs=1e-12)

    def test_percent_signs_accepted(self):
        p = percentile_to_point("10%::50%")
        assert p.v1 == pytest.approx(-1.2815515655446004, abs=1e-12)
        assert p.v2 == 0.0

    @pytest.mark.parametrize("bad", ["0::50", "50::100", "50", "a::b", "10::20::30"])
    def test_malformed_or_boundary_rejected(self, bad):
        with pytest.raises(ValueError):
            percentile_to_point(bad)

    def test_label(self):
        assert point_label("10::90") == "10-90"
        assert point_label("10%::90%") == "10-90"


class TestConfigFile:
    def test_round_trip_model_config(self, tmp_path):
        text = """
# reproduction script
data = model
points = 10::10, 50::50
b = 0.6, 0.6
m = 10
p = 5
window = tukey-hanning
grid = 256
R = 8
probs = 0.05, 0.95
n = 500
seed = 42

[model]
name = gaussian-wn
rho = 0.35
"""
        path = tmp_path / "run.cfg"
        path.write_text(text)
        config = parse_config_file(path)
        assert config.source == "model"
        assert config.model.name == "gaussian-wn"
        assert dict(config.model.params) == {"rho": 0.35}
        assert config.points == ("10::10", "50::50")
        assert config.m == 10 and config.r == 8 and config.n == 500
        assert config.grid_count == 256

    def test_csv_config_with_lists(self, tmp_path):
        text = """
data = csv
csv = prices.csv
columns = DAX, CAC
transform = log-return
pair = DAX, CAC
points = 90::90
block_len = 100
R = 100
"""
        path = tmp_path / "run.cfg"
        path.write_text(text)
        config = parse_config_file(path)
        assert config.source == "csv"
        assert config.columns == ("DAX", "CAC")
        assert config.pair == ("DAX", "CAC")
        assert config.block_len == 100

    def test_model_table_with_vectors(self, tmp_path):
        text = """
data = model
n = 400
R = 4

[model]
name = local-trig
levels = -2, -1, 0, 1
amp = 1.0, 0.5, 0.3, 0.5
amp2 = 0.5, 0.2, 0.2, 0.6
alpha = 0.267, 0.091, 0.431, 0.270
probs = 0.05050505, 0.28282828, 0.33333334, 0.33333333
theta = 1.0471975511965976, 1.0471975511965976, 1.0471975511965976, 1.0471975511965976
"""
        path = tmp_path / "trig.cfg"
        path.write_text(text)
        config = parse_config_file(path)
        assert config.model.name == "local-trig"

    def test_parse_error_lines(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("data model\n")
        with pytest.raises(ValueError, match="line 1"):
            parse_config_file(path)


class TestCache:
    def test_hash_stable_and_sensitive(self):
        a = small_model_config()
        b = small_model_config()
        assert a.config_hash() == b.config_hash()
        for change in (
            {"m": 4},
            {"seed": 12},
            {"points": ("10::10",)},
            {"b": (0.5, 0.5)},
            {"r": 5},
            {"window": "bartlett"},
        ):
            assert small_model_config(**change).config_hash() != a.config_hash()

    def test_cache_hit_returns_identical_bytes(self, tmp_path):
        cache = ResultCache(tmp_path)
        config = small_model_config()
        record1, cached1 = cached_record(config, cache, workers=1)
        raw1 = cache.get_bytes(config.config_hash())
        record2, cached2 = cached_record(config, cache, workers=1)
        raw2 = cache.get_bytes(config.config_hash())
        assert not cached1 and cached2
        assert raw1 == raw2
        assert record1["points"] == record2["points"]

    def test_records_reproducible_across_caches(self, tmp_path):
        config = small_model_config()
        rec_a, _ = cached_record(config, ResultCache(tmp_path / "a"), workers=1)
        rec_b, _ = cached_record(config, ResultCache(tmp_path / "b"), workers=1)
        assert rec_a["points"] == rec_b["points"]
        assert rec_a["config_hash"] == rec_b["config_hash"]

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        cache = ResultCache(tmp_path)
        cache.put("abc", {"x": 1})
        assert [p.name for p in tmp_path.iterdir()] == ["abc.json"]


@pytest.fixture(scope="module")
def record():
    return compute_bands_record(small_model_config(), workers=1)


class TestRecordsAndExport:

    def test_record_structure(self, record):
        entry = record["points"]["50::50"]
        assert set(entry["local"]["curves"]) == {"co", "quad", "amplitude", "phase"}
        assert entry["nc"]["r"] == 4
        assert len(entry["complex"]["re"]) == 4
        bands = entry["local"]["curves"]["co"]
        assert (
            len(bands["median"]) == len(bands["lower"]) == len(bands["upper"]) == 32
        )

    def test_export_schema(self, record, tmp_path):
        written = export_band_csvs(record, tmp_path)
        assert len(written) == 4
        names = sorted(p.name for p in written)
        assert names == [
            "amplitude_50-50.csv",
            "co_50-50.csv",
            "phase_50-50.csv",
            "quad_50-50.csv",
        ]
        header = written[0].read_text().splitlines()[0]
        assert header == (
            "omega,local_median,local_lo,local_hi,global_median,global_lo,global_hi"
        )
        body = written[0].read_text().splitlines()[1:]
        assert len(body) == 32
        # values round-trip exactly through repr
        first = body[0].split(",")
        assert float(first[0]) == record["points"]["50::50"]["local"]["omega"][0]

    def test_export_bytes_reproducible(self, record, tmp_path):
        a = export_band_csvs(record, tmp_path / "a")
        b = export_band_csvs(record, tmp_path / "b")
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()


class TestCli:
    def test_simulate_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "sim.csv"
        rc = main(
            [
                "simulate", "--model", "gaussian-wn", "--model-params", '{"rho": 0.35}',
                "--n", "50", "--seed", "3", "--out", str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "Y1,Y2"
        assert len(lines) == 51

    def test_estimate_outputs_correlations(self, tmp_path):
        sim = tmp_path / "sim.csv"
        main(["simulate", "--model", "gaussian-wn", "--n", "400", "--seed", "1",
              "--out", str(sim)])
        out = tmp_path / "est.json"
        rc = main(
            [
                "estimate", "--csv", str(sim), "--columns", "Y1,Y2",
                "--pair", "Y1,Y2", "--point", "50::50", "--m", "3", "--p", "1",
                "--grid", "32", "--out", str(out),
            ]
        )
        assert rc == 0
        record = json.loads(out.read_text())
        corr = record["points"]["50::50"]["correlations"]
        assert len(corr["rho_forward"]) == 4
        assert len(corr["rho_reflected"]) == 3

    def test_spectra_command_uses_cache(self, tmp_path, capsys):
        cfg_text = """
data = model
points = 50::50
m = 3
p = 1
grid = 32
R = 4
n = 300
seed = 7
record_kind = spectra

[model]
name = gaussian-wn
rho = 0.3
"""
        cfg = tmp_path / "run.cfg"
        cfg.write_text(cfg_text)
        cache_dir = tmp_path / "cache"
        rc1 = main(["spectra", "--config", str(cfg), "--cache-dir", str(cache_dir)])
        first = capsys.readouterr().out
        rc2 = main(["spectra", "--config", str(cfg), "--cache-dir", str(cache_dir)])
        second = capsys.readouterr().out
        assert rc1 == rc2 == 0
        assert "(computed)" in first
        assert "(cache hit)" in second
        assert first.split()[0] == second.split()[0]

    def test_export_figure_regenerates_files(self, tmp_path):
        # shrunken preset: the full-size run belongs to the acceptance suite
        outdir = tmp_path / "fig"
        rc = main(
            [
                "export", "--figure", "gaussian-wn", "--out", str(outdir),
                "--cache-dir", str(tmp_path / "cache"), "--r", "4", "--grid", "32",
                "--workers", "1",
            ]
        )
        assert rc == 0
        files = sorted(p.name for p in outdir.iterdir())
        assert len(files) == 12  # 4 curves x 3 points
        assert "co_10-10.csv" in files

    def test_unknown_figure_rejected(self, capsys):
        with pytest.raises(SystemExit):
            main(["export", "--figure", "nope", "--out", "x"])


class TestFigurePresets:
    def test_presets_cover_reported_figures(self):
        assert set(FIGURE_PRESETS) == {
            "gaussian-wn", "cosine", "local-trig-a", "local-trig-c",
        }
        gw = FIGURE_PRESETS["gaussian-wn"]
        assert gw.n == 1859 and gw.r == 100
        assert gw.points == ("10::10", "50::50", "90::90")
        assert gw.b == (0.6, 0.6) and gw.m == 10 and gw.p == 5
