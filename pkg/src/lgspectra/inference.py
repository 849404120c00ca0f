"""Confidence bands from model replicates or a circular block bootstrap.

Pointwise bands are empirical order-statistic quantiles over a replicate
ensemble of spectrum estimates.  Replicates whose fits did not all converge
are excluded from the quantiles and reported as a count.  Phase curves get
special treatment: the phase lives on the circle, so per-frequency values
are recentred around their circular median before quantiling and a
branch-cut warning flags frequencies whose band pokes past +-pi.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from .pipeline import EstimationConfig, estimate_pair_spectra
from .simulate import replicate_seeds
from .spectra import SpectrumEstimate
from .timeseries import MultivariateSeries, PseudoNormalizedSeries, pseudo_normalize

CURVES = ("co", "quad", "amplitude", "phase")


@dataclass(frozen=True)
class BandEnsemble:
    """R replicate spectrum estimates sharing one grid and configuration."""

    replicates: tuple
    source: str  # "model" | "bootstrap"
    seed: int | None = None

    def __post_init__(self):
        if len(self.replicates) < 2:
            raise ValueError("an ensemble needs at least two replicates")
        grid0 = self.replicates[0].grid.values
        for est in self.replicates[1:]:
            if len(est.grid.values) != len(grid0) or not np.array_equal(
                est.grid.values, grid0
            ):
                raise ValueError("replicates must share one frequency grid")

    @property
    def r(self) -> int:
        return len(self.replicates)

    @property
    def omega(self) -> np.ndarray:
        return self.replicates[0].grid.values

    @property
    def n_flagged(self) -> int:
        return sum(1 for est in self.replicates if not est.converged_all)

    def unflagged(self) -> list[SpectrumEstimate]:
        return [est for est in self.replicates if est.converged_all]

    def curve_matrix(self, curve: str, unflagged_only: bool = True) -> np.ndarray:
        """Stack one derived curve across replicates, shape (R_eff, N_omega)."""
        source = self.unflagged() if unflagged_only else self.replicates
        return np.stack([getattr(est, curve) for est in source])


@dataclass(frozen=True)
class ConfidenceBands:
    """Per-curve pointwise (median, lower, upper) arrays over the grid.

    Quantiles are the order statistics at ceil(p * R), so widening the
    probability pair never narrows an interval.  ``phase_branch_cut`` marks
    frequencies where the recentred phase band crosses +-pi; there the phase
    panel is unreliable and the co/quad curves should be consulted.
    """

    omega: np.ndarray
    probs: tuple[float, float]
    median: dict
    lower: dict
    upper: dict
    n_replicates: int
    n_flagged: int
    phase_branch_cut: np.ndarray | None = None

    def width(self, curve: str) -> np.ndarray:
        return self.upper[curve] - self.lower[curve]

    def to_dict(self) -> dict:
        out = {
            "omega": [float(x) for x in self.omega],
            "probs": list(self.probs),
            "n_replicates": self.n_replicates,
            "n_flagged": self.n_flagged,
            "curves": {},
        }
        for curve in self.median:
            out["curves"][curve] = {
                "median": [float(x) for x in self.median[curve]],
                "lower": [float(x) for x in self.lower[curve]],
                "upper": [float(x) for x in self.upper[curve]],
            }
        if self.phase_branch_cut is not None:
            out["phase_branch_cut"] = [bool(x) for x in self.phase_branch_cut]
        return out


def _order_index(p: float, r: int) -> int:
    """Order statistic index (0-based) for probability p over r values."""
    return min(max(math.ceil(p * r) - 1, 0), r - 1)


def _wrap(x: np.ndarray) -> np.ndarray:
    """Wrap angles into [-pi, pi)."""
    return np.mod(x + np.pi, 2.0 * np.pi) - np.pi


def _circular_median(phases: np.ndarray, chunk: int = 128) -> np.ndarray:
    """Per-column circular median: the sample value minimising sum |wrapped diff|."""
    r, n = phases.shape
    out = np.empty(n)
    for start in range(0, n, chunk):
        block = phases[:, start : start + chunk]  # (r, c)
        diffs = _wrap(block[None, :, :] - block[:, None, :])  # (cand, r, c)
        cost = np.sum(np.abs(diffs), axis=1)  # (cand, c)
        best = np.argmin(cost, axis=0)
        out[start : start + chunk] = block[best, np.arange(block.shape[1])]
    return out


def pointwise_bands(
    ensemble: BandEnsemble, probs: tuple[float, float] = (0.05, 0.95)
) -> ConfidenceBands:
    """Per-frequency empirical quantile bands of each derived curve."""
    lo_p, hi_p = probs
    if not (0.0 < lo_p < hi_p < 1.0):
        raise ValueError("probs must be strictly ordered within (0, 1)")
    good = ensemble.unflagged()
    if len(good) < 2:
        raise ValueError(
            f"need at least 2 converged replicates, have {len(good)} "
            f"({ensemble.n_flagged} flagged)"
        )
    r = len(good)
    idx = {
        "lower": _order_index(lo_p, r),
        "median": _order_index(0.5, r),
        "upper": _order_index(hi_p, r),
    }
    median, lower, upper = {}, {}, {}
    for curve in ("co", "quad", "amplitude"):
        mat = np.sort(np.stack([getattr(est, curve) for est in good]), axis=0)
        lower[curve] = mat[idx["lower"]]
        median[curve] = mat[idx["median"]]
        upper[curve] = mat[idx["upper"]]

    phases = np.stack([est.phase for est in good])
    centre = _circular_median(phases)
    d = np.sort(_wrap(phases - centre[None, :]), axis=0)
    lower["phase"] = centre + d[idx["lower"]]
    median["phase"] = centre + d[idx["median"]]
    upper["phase"] = centre + d[idx["upper"]]
    branch = (lower["phase"] < -np.pi) | (upper["phase"] > np.pi)

    return ConfidenceBands(
        omega=ensemble.omega,
        probs=(lo_p, hi_p),
        median=median,
        lower=lower,
        upper=upper,
        n_replicates=r,
        n_flagged=ensemble.n_flagged,
        phase_branch_cut=branch,
    )


@dataclass(frozen=True)
class ComplexSummary:
    """Polar and Cartesian ensemble summaries of f(omega) at one frequency."""

    omega: float
    values: np.ndarray  # complex, one per unflagged replicate
    probs: tuple[float, float]
    re: tuple[float, float, float]  # (median, lower, upper)
    im: tuple[float, float, float]
    modulus: tuple[float, float, float]
    argument: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "re": [float(x) for x in self.values.real],
            "im": [float(x) for x in self.values.imag],
            "probs": list(self.probs),
            "summary": {
                "re": list(self.re),
                "im": list(self.im),
                "modulus": list(self.modulus),
                "argument": list(self.argument),
            },
        }


def complex_summary_at_frequency(
    ensemble: BandEnsemble, omega: float, probs: tuple[float, float] = (0.05, 0.95)
) -> ComplexSummary:
    """The replicate cloud of complex spectrum values at a grid frequency."""
    grid = ensemble.omega
    matches = np.nonzero(np.isclose(grid, omega, rtol=0.0, atol=1e-12))[0]
    if len(matches) == 0:
        raise ValueError(f"omega={omega} is not on the frequency grid")
    j = int(matches[0])
    good = ensemble.unflagged()
    if len(good) < 2:
        raise ValueError("need at least 2 converged replicates")
    values = np.array([est.values[j] for est in good])
    r = len(values)
    idx = (_order_index(0.5, r), _order_index(probs[0], r), _order_index(probs[1], r))

    def stats(x: np.ndarray) -> tuple[float, float, float]:
        s = np.sort(x)
        return (float(s[idx[0]]), float(s[idx[1]]), float(s[idx[2]]))

    args = np.angle(values)
    centre = _circular_median(args[:, None])[0]
    d = np.sort(_wrap(args - centre))
    argument = (
        float(centre + d[idx[0]]),
        float(centre + d[idx[1]]),
        float(centre + d[idx[2]]),
    )
    return ComplexSummary(
        omega=float(grid[j]),
        values=values,
        probs=probs,
        re=stats(values.real),
        im=stats(values.imag),
        modulus=stats(np.abs(values)),
        argument=argument,
    )


# -- replicate generation -----------------------------------------------------


def _default_workers() -> int:
    env = os.environ.get("LGSPECTRA_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, min(os.cpu_count() or 1, 8))


def _model_task(args):
    model, n, config, seed, want_local, want_global = args
    series = model(n, seed)
    result = estimate_pair_spectra(
        pseudo_normalize(series), config, want_local, want_global
    )
    return result.local, result.global_


def _bootstrap_task(args):
    names, values, transform, config, want_local, want_global = args
    series = MultivariateSeries(
        names=names, values=values, source="bootstrap", transform=transform
    )
    result = estimate_pair_spectra(
        pseudo_normalize(series), config, want_local, want_global
    )
    return result.local, result.global_


def _run_tasks(task_fn, tasks, workers, progress=None):
    results = [None] * len(tasks)
    if workers <= 1 or len(tasks) < 2:
        for i, task in enumerate(tasks):
            results[i] = task_fn(task)
            if progress is not None:
                progress(i + 1, len(tasks))
        return results
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(task_fn, task): i for i, task in enumerate(tasks)}
        done = 0
        for future in as_completed(futures):
            results[futures[future]] = future.result()
            done += 1
            if progress is not None:
                progress(done, len(tasks))
    return results


def replicate_ensembles(
    model,
    r: int,
    n: int,
    config: EstimationConfig,
    seed,
    workers: int | None = None,
    progress=None,
) -> tuple[BandEnsemble, BandEnsemble]:
    """Local and global ensembles from R independent model simulations.

    Replicate i draws from an independent child stream of the master seed,
    so results are reproducible regardless of worker scheduling.  Both
    ensembles come from the same simulated samples.
    """
    if r < 2:
        raise ValueError("need at least R=2 replicates")
    workers = _default_workers() if workers is None else max(1, workers)
    seeds = replicate_seeds(seed, r)
    tasks = [(model, n, config, seeds[i], True, True) for i in range(r)]
    results = _run_tasks(_model_task, tasks, workers, progress)
    local = BandEnsemble(
        replicates=tuple(res[0] for res in results), source="model", seed=_seed_int(seed)
    )
    global_ = BandEnsemble(
        replicates=tuple(res[1] for res in results), source="model", seed=_seed_int(seed)
    )
    return local, global_


def replicate_ensemble(
    model,
    r: int,
    n: int,
    config: EstimationConfig,
    seed,
    kind: str = "local",
    workers: int | None = None,
    progress=None,
) -> BandEnsemble:
    """One ensemble of the requested kind ("local" or "global")."""
    if kind not in ("local", "global"):
        raise ValueError("kind must be 'local' or 'global'")
    if r < 2:
        raise ValueError("need at least R=2 replicates")
    workers = _default_workers() if workers is None else max(1, workers)
    seeds = replicate_seeds(seed, r)
    want_local = kind == "local"
    tasks = [(model, n, config, seeds[i], want_local, not want_local) for i in range(r)]
    results = _run_tasks(_model_task, tasks, workers, progress)
    estimates = tuple(res[0] if want_local else res[1] for res in results)
    return BandEnsemble(replicates=estimates, source="model", seed=_seed_int(seed))


def _seed_int(seed) -> int | None:
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    return None


def block_bootstrap(
    series: PseudoNormalizedSeries | MultivariateSeries,
    block_len: int,
    r: int,
    seed,
) -> list[MultivariateSeries]:
    """Circular moving-block resamples of the multivariate rows.

    Blocks of ``block_len`` consecutive rows (wrapping at the end) are drawn
    with uniformly random start indices and concatenated until n rows are
    reached; all columns are resampled jointly, preserving cross-dependence.
    block_len = n yields cyclic rotations, block_len = 1 i.i.d. row draws.
    """
    values = series.values
    n = values.shape[0]
    if not 1 <= block_len <= n:
        raise ValueError(f"block length {block_len} out of range 1..{n}")
    n_blocks = -(-n // block_len)  # ceil
    offsets = np.arange(block_len)
    out = []
    for child in replicate_seeds(seed, r):
        rng = np.random.default_rng(child)
        starts = rng.integers(0, n, size=n_blocks)
        idx = ((starts[:, None] + offsets[None, :]) % n).ravel()[:n]
        out.append(
            MultivariateSeries(
                names=series.names,
                values=values[idx],
                source="bootstrap",
                transform=series.transform,
            )
        )
    return out


def bootstrap_ensembles(
    pseudo: PseudoNormalizedSeries,
    block_len: int,
    r: int,
    config: EstimationConfig,
    seed,
    workers: int | None = None,
    progress=None,
) -> tuple[BandEnsemble, BandEnsemble]:
    """Local and global ensembles over circular block-bootstrap resamples.

    Each resample is pseudo-normalised again before estimation (resampling
    repeats rows, so ranks must be recomputed; ranks are invariant under the
    original monotone transform, hence resampling pseudo-normalised rows and
    resampling raw rows give identical estimates).
    """
    if r < 2:
        raise ValueError("need at least R=2 replicates")
    workers = _default_workers() if workers is None else max(1, workers)
    resamples = block_bootstrap(pseudo, block_len, r, seed)
    tasks = [
        (series.names, series.values, series.transform, config, True, True)
        for series in resamples
    ]
    results = _run_tasks(_bootstrap_task, tasks, workers, progress)
    local = BandEnsemble(
        replicates=tuple(res[0] for res in results),
        source="bootstrap",
        seed=_seed_int(seed),
    )
    global_ = BandEnsemble(
        replicates=tuple(res[1] for res in results),
        source="bootstrap",
        seed=_seed_int(seed),
    )
    return local, global_
