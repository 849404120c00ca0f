"""Desk-scale empirical checks standing in for the asymptotic theory.

Closed-form variance plug-ins for the spectrum estimators are not practical,
so the checks here validate behaviour instead: a grid-search oracle for the
one-parameter fit, finite-difference verification of the analytic penalty
gradient, the Gaussian coincidence of local and global spectra, and a
Monte-Carlo convergence-rate diagnostic for the correlation estimator
(variance ~ 1/n at fixed bandwidth, i.e. slope -1 on a log-log plot).

Every diagnostic is deterministic under a fixed seed and returns a report
object with a machine-readable dict form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .local_gaussian import (
    Bandwidth,
    GaussianParam,
    Point,
    _penalty_parts,
    _weighted_moments,
    fit_local_gaussian,
    kernel_weight,
    penalty_gradient,
)
from .inference import pointwise_bands, replicate_ensembles
from .pipeline import EstimationConfig
from .simulate import replicate_seeds
from .timeseries import lag_pairs, pseudo_normalize
from .local_gaussian import _as_pairs


def grid_oracle_p1(pairs, v: Point, b: Bandwidth, step: float = 1e-4) -> float:
    """Exhaustive minimisation of the one-parameter penalty over rho.

    Independent oracle for the Newton fit: evaluates the penalty on the grid
    rho in (-0.999, 0.999) with the given step and returns the minimiser.
    The evaluation is vectorised through the weighted moments, so the cost
    is O(n + grid).
    """
    arr = _as_pairs(pairs)
    w = kernel_weight(arr, v, b) if len(arr) else np.zeros(0)
    sw, sx, sxx = _weighted_moments(arr, w)
    n = len(arr)
    rho = np.arange(-0.999, 0.999 + step / 2, step)
    omr = 1.0 - rho * rho
    # data term: -sum w log psi_1 = sw (log 2pi + 0.5 log(1-rho^2))
    #            + (sxx11 - 2 rho sxx12 + sxx22) / (2 (1-rho^2))
    data = sw * (np.log(2 * np.pi) + 0.5 * np.log(omr)) + (
        sxx[0, 0] - 2.0 * rho * sxx[0, 1] + sxx[1, 1]
    ) / (2.0 * omr)
    # integral term: closed-form kernel-smoothed Gaussian density at v
    c11 = 1.0 + b.b1 * b.b1
    c22 = 1.0 + b.b2 * b.b2
    det = c11 * c22 - rho * rho
    quad = (v.v1 * v.v1 * c22 - 2.0 * rho * v.v1 * v.v2 + v.v2 * v.v2 * c11) / det
    integral = np.exp(-0.5 * quad) / (2.0 * np.pi * np.sqrt(det))
    total = data + n * integral
    return float(rho[np.argmin(total)])


@dataclass(frozen=True)
class GradientCheckReport:
    order: int
    trials: int
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def to_dict(self) -> dict:
        return {
            "check": "finite_difference_gradient",
            "order": self.order,
            "trials": self.trials,
            "max_rel_error": self.max_rel_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def finite_difference_check(
    pairs,
    v: Point,
    b: Bandwidth,
    p: int,
    trials: int = 20,
    seed: int = 0,
    eps: float = 1e-6,
    tolerance: float = 1e-5,
) -> GradientCheckReport:
    """Central differences of the penalty against the analytic gradient.

    Relative error per trial is max_i |fd_i - an_i| / max(1, max_i |an_i|);
    the report carries the worst trial.
    """
    arr = _as_pairs(pairs)
    w = kernel_weight(arr, v, b) if len(arr) else np.zeros(0)
    moments = _weighted_moments(arr, w)
    n = len(arr)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        if p == 1:
            theta = np.array([rng.uniform(-0.9, 0.9)])
        else:
            theta = np.array(
                [
                    rng.normal(0.0, 0.5),
                    rng.normal(0.0, 0.5),
                    rng.uniform(0.5, 2.0),
                    rng.uniform(0.5, 2.0),
                    rng.uniform(-0.9, 0.9),
                ]
            )
        _, grad, _ = _penalty_parts(theta, p, moments, n, v, b, False)
        fd = np.zeros_like(theta)
        for i in range(len(theta)):
            hi = theta.copy()
            lo = theta.copy()
            hi[i] += eps
            lo[i] -= eps
            vhi, _, _ = _penalty_parts(hi, p, moments, n, v, b, False)
            vlo, _, _ = _penalty_parts(lo, p, moments, n, v, b, False)
            fd[i] = (vhi - vlo) / (2.0 * eps)
        rel = float(np.max(np.abs(fd - grad)) / max(1.0, np.max(np.abs(grad))))
        worst = max(worst, rel)
    return GradientCheckReport(
        order=p, trials=trials, max_rel_error=worst, tolerance=tolerance
    )


@dataclass(frozen=True)
class CoincidenceReport:
    """Gaussian data: the local co-spectrum should match the global one."""

    rho: float
    n: int
    r: int
    tolerance: float
    gaps: dict  # point label -> max |median local co - median global co|
    coverage: dict  # point label -> fraction of grid where truth inside local band
    passed: bool

    def to_dict(self) -> dict:
        return {
            "check": "gaussian_coincidence",
            "rho": self.rho,
            "n": self.n,
            "r": self.r,
            "tolerance": self.tolerance,
            "gaps": self.gaps,
            "coverage": self.coverage,
            "passed": self.passed,
        }


def gaussian_coincidence_check(
    n: int,
    rho: float,
    points: dict,
    config: EstimationConfig,
    r: int,
    seed,
    tolerance: float = 0.1,
    workers: int | None = None,
) -> CoincidenceReport:
    """Compare ensemble-median local and global co-spectra on Gaussian noise.

    ``points`` maps labels to Point objects; the estimation config supplies
    everything but the point.  Passes when every per-point max gap between
    the two median curves stays below the tolerance.
    """
    from dataclasses import replace

    from .simulate import model_from_spec

    model = model_from_spec("gaussian-wn", {"rho": rho})
    gaps = {}
    coverage = {}
    for label, point in points.items():
        cfg = replace(config, point=point)
        local, global_ = replicate_ensembles(model, r, n, cfg, seed, workers=workers)
        lb = pointwise_bands(local)
        gb = pointwise_bands(global_)
        gaps[label] = float(np.max(np.abs(lb.median["co"] - gb.median["co"])))
        inside = (lb.lower["co"] <= rho) & (rho <= lb.upper["co"])
        coverage[label] = float(np.mean(inside))
    passed = all(g <= tolerance for g in gaps.values())
    return CoincidenceReport(
        rho=rho,
        n=n,
        r=r,
        tolerance=tolerance,
        gaps=gaps,
        coverage=coverage,
        passed=passed,
    )


@dataclass(frozen=True)
class RateReport:
    """Least-squares slope of log Var(rho-hat) against log n at fixed bandwidth."""

    sizes: tuple
    variances: tuple
    slope: float
    expected: float
    tolerance: float
    n_failed: int

    @property
    def passed(self) -> bool:
        return abs(self.slope - self.expected) <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "check": "clt_rate",
            "sizes": list(self.sizes),
            "variances": list(self.variances),
            "slope": self.slope,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "n_failed": self.n_failed,
            "passed": self.passed,
        }


def clt_rate_diagnostic(
    model,
    point: Point,
    h: int,
    p: int,
    b: Bandwidth,
    n_grid,
    r: int,
    seed,
    expected: float = -1.0,
    tolerance: float = 0.3,
) -> RateReport:
    """Monte-Carlo variance of the lag-h local correlation across sample sizes.

    With the bandwidth held fixed the estimator variance scales like 1/n, so
    the fitted log-log slope should sit near -1.  Requires at least three
    sizes spanning a decade.
    """
    sizes = sorted(int(x) for x in n_grid)
    if len(sizes) < 3 or sizes[-1] < 10 * sizes[0]:
        raise ValueError("n_grid needs >= 3 sizes spanning at least one decade")
    variances = []
    n_failed = 0
    all_seeds = replicate_seeds(seed, r * len(sizes))
    for idx, n in enumerate(sizes):
        estimates = []
        for child in all_seeds[idx * r : (idx + 1) * r]:
            series = model(n, child)
            pseudo = pseudo_normalize(series)
            pairs = lag_pairs(pseudo.column(0), pseudo.column(1), h)
            fit = fit_local_gaussian(pairs, point, b, p)
            if fit.converged:
                estimates.append(fit.theta.rho)
            else:
                n_failed += 1
        variances.append(float(np.var(estimates, ddof=1)))
    x = np.log(np.asarray(sizes, dtype=float))
    y = np.log(np.asarray(variances))
    slope = float(np.polyfit(x, y, 1)[0])
    return RateReport(
        sizes=tuple(sizes),
        variances=tuple(variances),
        slope=slope,
        expected=expected,
        tolerance=tolerance,
        n_failed=n_failed,
    )
