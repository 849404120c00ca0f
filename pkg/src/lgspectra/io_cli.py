"""Run configuration, result caching, plot-data export and the CLI.

A run configuration names a data source (CSV columns or a simulation
model), the estimation parameters, and the band settings.  Its canonical
JSON form is hashed into the cache key; records are stored as canonical
JSON bytes and written atomically, so a cache hit returns the identical
bytes and identical configurations reproduce identical artifacts.

Config files are line-oriented ``key = value`` text with an optional
``[model]`` table for simulator parameters; all numbers are plain decimal.
Exported plot data is CSV, one file per curve and point, with columns
omega, local_median, local_lo, local_hi, global_median, global_lo,
global_hi.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .inference import (
    BandEnsemble,
    bootstrap_ensembles,
    pointwise_bands,
    replicate_ensembles,
)
from .local_gaussian import Bandwidth, Point
from .pipeline import EstimationConfig, estimate_pair_spectra
from .simulate import MODEL_NAMES, ModelSpec, model_from_spec
from .timeseries import load_csv, log_returns, pseudo_normalize

CACHE_ENV = "LGSPECTRA_CACHE_DIR"


def percentile_to_point(spec: str) -> Point:
    """Map a percentile pair "a::b" (percent, open interval) to a plane point.

    "50::50" is the origin; "10::90" is (-1.2816, 1.2816).  Endpoints 0 and
    100 are rejected since the quantile function diverges there.
    """
    parts = str(spec).split("::")
    if len(parts) != 2:
        raise ValueError(f"malformed point spec {spec!r}; expected 'a::b'")
    coords = []
    for part in parts:
        part = part.strip().removesuffix("%")
        try:
            value = float(part)
        except ValueError:
            raise ValueError(f"malformed point spec {spec!r}: {part!r} is not a number") from None
        if not 0.0 < value < 100.0:
            raise ValueError(f"point spec {spec!r}: percentile {value} outside (0, 100)")
        coords.append(float(ndtri(value / 100.0)))
    return Point(coords[0], coords[1])


def point_label(spec: str) -> str:
    """Normalise a point spec into a file-name-safe label ("10::10" -> "10-10")."""
    a, b = (part.strip().removesuffix("%") for part in str(spec).split("::"))
    return f"{a}-{b}"


@dataclass(frozen=True)
class RunConfig:
    """Everything a band run depends on; the hash covers every field here."""

    source: str  # "model" | "csv"
    model: ModelSpec | None = None
    csv_path: str | None = None
    columns: tuple[str, ...] = ()
    delimiter: str = ","
    transform: str = "raw"  # "raw" | "log-return"
    pair: tuple = (0, 1)
    points: tuple[str, ...] = ("50::50",)
    b: tuple[float, float] = (0.6, 0.6)
    m: int = 10
    p: int = 5
    window: str = "tukey-hanning"
    grid_count: int = 1024
    r: int = 100
    probs: tuple[float, float] = (0.05, 0.95)
    block_len: int | None = None
    n: int | None = None
    seed: int = 0
    record_kind: str = "bands"  # "bands" | "spectra"

    def __post_init__(self):
        if self.source not in ("model", "csv"):
            raise ValueError("source must be 'model' or 'csv'")
        if self.source == "model" and self.model is None:
            raise ValueError("model source needs a model spec")
        if self.source == "csv" and not self.csv_path:
            raise ValueError("csv source needs a path")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.record_kind == "bands" and self.r < 2:
            raise ValueError("bands need R >= 2 replicates")
        for spec in self.points:
            percentile_to_point(spec)  # validates
        if not (0.0 < self.probs[0] < self.probs[1] < 1.0):
            raise ValueError("probs must be strictly ordered in (0, 1)")

    def estimation_config(self, point_spec: str) -> EstimationConfig:
        return EstimationConfig(
            point=percentile_to_point(point_spec),
            bandwidth=Bandwidth(*self.b),
            m=self.m,
            p=self.p,
            window=self.window,
            grid_count=self.grid_count,
            pair=self.pair,
        )

    def key_dict(self) -> dict:
        """Canonical form of the semantically relevant fields (no output paths)."""
        return {
            "source": self.source,
            "model": None if self.model is None else self.model.to_dict(),
            "csv_path": self.csv_path,
            "columns": list(self.columns),
            "delimiter": self.delimiter,
            "transform": self.transform,
            "pair": list(self.pair),
            "points": list(self.points),
            "b": list(self.b),
            "m": self.m,
            "p": self.p,
            "window": self.window,
            "grid_count": self.grid_count,
            "r": self.r,
            "probs": list(self.probs),
            "block_len": self.block_len,
            "n": self.n,
            "seed": self.seed,
            "record_kind": self.record_kind,
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.key_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


# -- config files -------------------------------------------------------------


def _parse_sections(text: str) -> dict:
    sections: dict[str, dict] = {"": {}}
    current = sections[""]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        current[key.strip()] = value.strip()
    return sections


def _split_list(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def parse_config_file(path) -> RunConfig:
    """Read a RunConfig from the line-oriented key/value format."""
    sections = _parse_sections(Path(path).read_text())
    top = sections[""]
    model_section = sections.get("model", {})

    source = top.get("data", "model")
    model = None
    if source == "model":
        name = top.get("model") or model_section.get("name")
        if not name:
            raise ValueError("model source needs 'model = <name>' or a [model] table")
        params = {}
        for key, value in model_section.items():
            if key == "name":
                continue
            parts = _split_list(value)
            params[key] = [float(x) for x in parts] if len(parts) > 1 else float(value)
        model = model_from_spec(name, params)

    def get(key, default=None):
        return top.get(key, default)

    pair_raw = _split_list(get("pair", "0,1"))
    pair = tuple(int(x) if x.lstrip("+-").isdigit() else x for x in pair_raw)
    kwargs = dict(
        source=source,
        model=model,
        csv_path=get("csv"),
        columns=tuple(_split_list(get("columns", ""))),
        delimiter=get("delimiter", ","),
        transform=get("transform", "raw"),
        pair=pair,
        points=tuple(_split_list(get("points", "50::50"))),
        b=tuple(float(x) for x in _split_list(get("b", "0.6, 0.6"))),
        m=int(get("m", 10)),
        p=int(get("p", 5)),
        window=get("window", "tukey-hanning"),
        grid_count=int(get("grid", 1024)),
        r=int(get("R", get("r", 100))),
        probs=tuple(float(x) for x in _split_list(get("probs", "0.05, 0.95"))),
        seed=int(get("seed", 0)),
        record_kind=get("record_kind", "bands"),
    )
    if get("block_len") is not None:
        kwargs["block_len"] = int(get("block_len"))
    if get("n") is not None:
        kwargs["n"] = int(get("n"))
    return RunConfig(**kwargs)


# -- cache --------------------------------------------------------------------


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, "~/.cache/lgspectra")).expanduser()


class ResultCache:
    """Content-addressed JSON record store with atomic writes."""

    def __init__(self, directory: Path | str | None = None):
        self.directory = Path(directory) if directory else default_cache_dir()

    def path_for(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get_bytes(self, key: str) -> bytes | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        return path.read_bytes()

    def get(self, key: str) -> dict | None:
        raw = self.get_bytes(key)
        return None if raw is None else json.loads(raw)

    def put(self, key: str, record: dict) -> bytes:
        payload = json.dumps(record, sort_keys=True, separators=(",", ":")).encode()
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
            os.replace(tmp, self.path_for(key))
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return payload


# -- record computation --------------------------------------------------------


def _bands_payload(bands) -> dict:
    return bands.to_dict()


def _ensemble_complex(ensemble: BandEnsemble) -> dict:
    return {
        "re": [[float(x) for x in est.values.real] for est in ensemble.replicates],
        "im": [[float(x) for x in est.values.imag] for est in ensemble.replicates],
        "converged": [bool(est.converged_all) for est in ensemble.replicates],
    }


def _load_series(config: RunConfig):
    series = load_csv(config.csv_path, list(config.columns) or None, config.delimiter)
    if config.transform == "log-return":
        series = log_returns(series)
    return series


def compute_bands_record(
    config: RunConfig,
    workers: int | None = None,
    progress=None,
    keep_complex: bool = True,
) -> dict:
    """Band record for every requested point: curves, counters and timing."""
    started = time.perf_counter()
    points_out = {}
    if config.source == "csv":
        if config.block_len is None:
            raise ValueError("csv band runs need block_len for the bootstrap")
        series = _load_series(config)
        pseudo = pseudo_normalize(series)
    for spec in config.points:
        est_cfg = config.estimation_config(spec)
        if config.source == "model":
            if config.n is None:
                raise ValueError("model band runs need the series length n")
            local, global_ = replicate_ensembles(
                config.model, config.r, config.n, est_cfg, config.seed,
                workers=workers, progress=progress,
            )
        else:
            local, global_ = bootstrap_ensembles(
                pseudo, config.block_len, config.r, est_cfg, config.seed,
                workers=workers, progress=progress,
            )
        entry = {
            "local": _bands_payload(pointwise_bands(local, config.probs)),
            "global": _bands_payload(pointwise_bands(global_, config.probs)),
            "nc": {
                "r": config.r,
                "local_flagged": local.n_flagged,
                "global_flagged": global_.n_flagged,
            },
        }
        if config.source == "csv":
            sample = estimate_pair_spectra(pseudo, est_cfg)
            entry["sample"] = {
                "local": sample.local.to_dict(),
                "global": sample.global_.to_dict(),
                "correlations": sample.correlations.to_dict(),
            }
        if keep_complex:
            entry["complex"] = _ensemble_complex(local)
        points_out[spec] = entry
    return {
        "config": config.key_dict(),
        "config_hash": config.config_hash(),
        "points": points_out,
        "timing_seconds": round(time.perf_counter() - started, 3),
    }


def compute_spectra_record(config: RunConfig) -> dict:
    """Point-estimate record (no bands): one series, local + global spectra."""
    started = time.perf_counter()
    if config.source == "model":
        if config.n is None:
            raise ValueError("model spectra runs need the series length n")
        series = config.model(config.n, config.seed)
    else:
        series = _load_series(config)
    pseudo = pseudo_normalize(series)
    points_out = {}
    for spec in config.points:
        est_cfg = config.estimation_config(spec)
        result = estimate_pair_spectra(pseudo, est_cfg)
        points_out[spec] = {
            "local": result.local.to_dict(),
            "global": result.global_.to_dict(),
            "correlations": result.correlations.to_dict(),
        }
    return {
        "config": config.key_dict(),
        "config_hash": config.config_hash(),
        "points": points_out,
        "timing_seconds": round(time.perf_counter() - started, 3),
    }


def cached_record(
    config: RunConfig,
    cache: ResultCache | None = None,
    workers: int | None = None,
    progress=None,
) -> tuple[dict, bool]:
    """Fetch or compute the record for a config; returns (record, was_cached)."""
    cache = cache or ResultCache()
    key = config.config_hash()
    hit = cache.get(key)
    if hit is not None:
        return hit, True
    if config.record_kind == "bands":
        record = compute_bands_record(config, workers=workers, progress=progress)
    else:
        record = compute_spectra_record(config)
    cache.put(key, record)
    return record, False


# -- export ---------------------------------------------------------------------

CURVE_NAMES = ("co", "quad", "amplitude", "phase")


def export_band_csvs(record: dict, outdir: Path | str) -> list[Path]:
    """One CSV per curve per point with local and global medians and band edges."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for spec, entry in record["points"].items():
        if "local" not in entry or "curves" not in entry["local"]:
            raise ValueError("record has no band curves to export")
        omega = entry["local"]["omega"]
        for curve in CURVE_NAMES:
            lc = entry["local"]["curves"][curve]
            gc_ = entry["global"]["curves"][curve]
            path = outdir / f"{curve}_{point_label(spec)}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(
                    [
                        "omega",
                        "local_median",
                        "local_lo",
                        "local_hi",
                        "global_median",
                        "global_lo",
                        "global_hi",
                    ]
                )
                for i, w in enumerate(omega):
                    writer.writerow(
                        [
                            repr(float(w)),
                            repr(float(lc["median"][i])),
                            repr(float(lc["lower"][i])),
                            repr(float(lc["upper"][i])),
                            repr(float(gc_["median"][i])),
                            repr(float(gc_["lower"][i])),
                            repr(float(gc_["upper"][i])),
                        ]
                    )
            written.append(path)
    return written


FIGURE_PRESETS = {
    "gaussian-wn": RunConfig(
        source="model",
        model=model_from_spec("gaussian-wn", {"rho": 0.35}),
        points=("10::10", "50::50", "90::90"),
        n=1859,
        seed=2024,
    ),
    "cosine": RunConfig(
        source="model",
        model=model_from_spec("cosine"),
        points=("10::10", "50::50"),
        n=1859,
        seed=2025,
    ),
    "local-trig-a": RunConfig(
        source="model",
        model=model_from_spec("local-trig-a"),
        points=("10::10", "50::50", "90::90"),
        n=1859,
        seed=2026,
    ),
    "local-trig-c": RunConfig(
        source="model",
        model=model_from_spec("local-trig-c"),
        points=("10::10", "50::50", "90::90"),
        n=1859,
        seed=2027,
    ),
}


# -- CLI ----------------------------------------------------------------------


def _add_estimation_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--point", action="append", default=None, metavar="A::B")
    parser.add_argument("--b", default="0.6,0.6", help="bandwidths b1,b2")
    parser.add_argument("--m", type=int, default=10)
    parser.add_argument("--p", type=int, default=5, choices=(1, 5))
    parser.add_argument("--window", default="tukey-hanning")
    parser.add_argument("--grid", type=int, default=1024)
    parser.add_argument("--seed", type=int, default=0)


def _csv_flags_to_config(args, record_kind: str) -> RunConfig:
    points = tuple(args.point or ["50::50"])
    b = tuple(float(x) for x in args.b.split(","))
    common = dict(
        points=points, b=b, m=args.m, p=args.p, window=args.window,
        grid_count=args.grid, seed=args.seed, record_kind=record_kind,
    )
    if getattr(args, "csv", None):
        columns = tuple(args.columns.split(",")) if args.columns else ()
        pair = tuple(args.pair.split(",")) if args.pair else (0, 1)
        return RunConfig(
            source="csv", csv_path=args.csv, columns=columns,
            transform=args.transform, pair=pair,
            block_len=getattr(args, "block_len", None),
            r=getattr(args, "replicates", 100), **common,
        )
    model = model_from_spec(args.model, json.loads(args.model_params))
    return RunConfig(
        source="model", model=model, n=args.n,
        r=getattr(args, "replicates", 100), **common,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lgspectra",
        description="Local Gaussian cross-spectrum estimation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="write a simulated series to CSV")
    p_sim.add_argument("--model", required=True, choices=MODEL_NAMES)
    p_sim.add_argument("--model-params", default="{}", help="JSON parameter object")
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)

    p_est = sub.add_parser("estimate", help="local correlations for one series")
    p_est.add_argument("--csv")
    p_est.add_argument("--columns", default="")
    p_est.add_argument("--pair", default="")
    p_est.add_argument("--transform", default="raw", choices=("raw", "log-return"))
    p_est.add_argument("--model", choices=MODEL_NAMES)
    p_est.add_argument("--model-params", default="{}")
    p_est.add_argument("--n", type=int)
    p_est.add_argument("--out")
    _add_estimation_flags(p_est)

    for name, help_text in (
        ("spectra", "single-sample local and global spectra (cached)"),
        ("bands", "confidence-band record (cached)"),
    ):
        p_cfg = sub.add_parser(name, help=help_text)
        p_cfg.add_argument("--config", required=True, help="config file path")
        p_cfg.add_argument("--cache-dir")
        p_cfg.add_argument("--workers", type=int)
        p_cfg.add_argument("--out", help="also write the record JSON here")

    p_exp = sub.add_parser("export", help="regenerate per-figure plot data CSVs")
    p_exp.add_argument("--figure", required=True, choices=sorted(FIGURE_PRESETS))
    p_exp.add_argument("--out", required=True)
    p_exp.add_argument("--cache-dir")
    p_exp.add_argument("--workers", type=int)
    p_exp.add_argument("--r", type=int, help="override replicate count")
    p_exp.add_argument("--grid", type=int, help="override grid size")

    p_diag = sub.add_parser("diagnose", help="run the estimator diagnostics")
    p_diag.add_argument("--quick", action="store_true", help="smaller configurations")
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--out", help="write JSON-lines report here")

    p_srv = sub.add_parser("serve", help="start the HTTP JSON API")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8572)
    p_srv.add_argument("--cache-dir")
    p_srv.add_argument(
        "--data", action="append", default=[], metavar="NAME=PATH[:TRANSFORM]",
        help="register a CSV dataset (transform: raw | log-return)",
    )
    p_srv.add_argument("--sync-r-limit", type=int, default=16)
    p_srv.add_argument("--workers", type=int)

    args = parser.parse_args(argv)

    if args.command == "simulate":
        model = model_from_spec(args.model, json.loads(args.model_params))
        series = model(args.n, args.seed)
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(series.names)
            for row in series.values:
                writer.writerow([repr(float(x)) for x in row])
        print(f"wrote {series.n} x {series.d} series to {args.out}")
        return 0

    if args.command == "estimate":
        config = _csv_flags_to_config(args, record_kind="spectra")
        record = compute_spectra_record(config)
        payload = json.dumps(record, sort_keys=True, indent=2)
        if args.out:
            Path(args.out).write_text(payload)
            print(f"wrote correlation records to {args.out}")
        else:
            print(payload)
        return 0

    if args.command in ("spectra", "bands"):
        config = parse_config_file(args.config)
        kind = "bands" if args.command == "bands" else "spectra"
        if config.record_kind != kind:
            from dataclasses import replace

            config = replace(config, record_kind=kind)
        cache = ResultCache(args.cache_dir)
        record, was_cached = cached_record(config, cache, workers=args.workers)
        origin = "cache hit" if was_cached else "computed"
        print(f"{config.config_hash()} ({origin})")
        if args.out:
            Path(args.out).write_text(json.dumps(record, sort_keys=True, indent=2))
        return 0

    if args.command == "export":
        config = FIGURE_PRESETS[args.figure]
        from dataclasses import replace

        if args.r:
            config = replace(config, r=args.r)
        if args.grid:
            config = replace(config, grid_count=args.grid)
        cache = ResultCache(args.cache_dir)
        record, was_cached = cached_record(config, cache, workers=args.workers)
        written = export_band_csvs(record, args.out)
        origin = "from cache" if was_cached else "computed"
        print(f"wrote {len(written)} files to {args.out} ({origin})")
        return 0

    if args.command == "diagnose":
        return _run_diagnose(args)

    if args.command == "serve":
        from .server import serve_forever

        datasets = {}
        for item in args.data:
            if "=" not in item:
                parser.error(f"--data expects NAME=PATH[:TRANSFORM], got {item!r}")
            name, path = item.split("=", 1)
            transform = "raw"
            if ":" in path:
                path, transform = path.rsplit(":", 1)
            datasets[name] = (path, transform)
        serve_forever(
            host=args.host,
            port=args.port,
            cache_dir=args.cache_dir,
            csv_datasets=datasets,
            sync_r_limit=args.sync_r_limit,
            workers=args.workers,
        )
        return 0

    parser.error(f"unknown command {args.command!r}")
    return 2


def _run_diagnose(args) -> int:
    from .diagnostics import (
        clt_rate_diagnostic,
        finite_difference_check,
        gaussian_coincidence_check,
        grid_oracle_p1,
    )
    from .simulate import gaussian_wn

    rng = np.random.default_rng(args.seed)
    pairs = rng.standard_normal((400, 2))
    v = Point(0.0, 0.0)
    b = Bandwidth(0.6, 0.6)
    reports = []

    for p in (1, 5):
        reports.append(finite_difference_check(pairs, v, b, p, seed=args.seed).to_dict())

    from .local_gaussian import fit_local_gaussian

    fit = fit_local_gaussian(pairs, v, b, 1)
    oracle = grid_oracle_p1(pairs, v, b)
    reports.append(
        {
            "check": "p1_newton_vs_grid_oracle",
            "newton": fit.theta.rho,
            "oracle": oracle,
            "gap": abs(fit.theta.rho - oracle),
            "tolerance": 1e-4,
            "passed": bool(abs(fit.theta.rho - oracle) < 1e-4),
        }
    )

    quick = bool(args.quick)
    from .simulate import model_from_spec

    cfg = EstimationConfig(
        point=v,
        bandwidth=b,
        m=5 if quick else 10,
        p=5,
        grid_count=256 if quick else 1024,
    )
    coincidence = gaussian_coincidence_check(
        n=600 if quick else 1859,
        rho=0.35,
        points={"50::50": v},
        config=cfg,
        r=20 if quick else 100,
        seed=args.seed,
        tolerance=0.2 if quick else 0.15,
    )
    reports.append(coincidence.to_dict())

    rate = clt_rate_diagnostic(
        model=model_from_spec("gaussian-wn", {"rho": 0.35}),
        point=v,
        h=1,
        p=1,
        b=b,
        n_grid=(200, 800, 3200) if quick else (500, 2000, 8000),
        r=60 if quick else 200,
        seed=args.seed,
    )
    reports.append(rate.to_dict())

    lines = [json.dumps(rep, sort_keys=True) for rep in reports]
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    all_passed = True
    for rep in reports:
        status = "PASS" if rep.get("passed", True) else "FAIL"
        all_passed = all_passed and rep.get("passed", True)
        print(f"{status} {rep['check']}")
    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
