"""Shared estimation pipeline: pseudo-normalised series -> spectra.

EstimationConfig carries everything the estimation step depends on (point,
bandwidth, truncation, approximation order, window, grid resolution, pair);
it is the cache key for downstream result records.
"""

from __future__ import annotations

from dataclasses import dataclass

from .local_gaussian import (
    Bandwidth,
    LocalCorrelationSet,
    Point,
    local_auto_correlations,
    local_cross_correlations,
)
from .spectra import (
    FrequencyGrid,
    SpectrumEstimate,
    global_cross_spectrum,
    local_cross_spectrum,
)
from .timeseries import PseudoNormalizedSeries


@dataclass(frozen=True)
class EstimationConfig:
    point: Point
    bandwidth: Bandwidth
    m: int
    p: int = 5
    window: str = "tukey-hanning"
    grid_count: int = 1024
    pair: tuple = (0, 1)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("truncation m must be >= 1")
        if self.p not in (1, 5):
            raise ValueError("approximation order p must be 1 or 5")
        if self.grid_count < 2:
            raise ValueError("grid_count must be >= 2")

    def grid(self) -> FrequencyGrid:
        return FrequencyGrid.default(self.grid_count)

    def to_dict(self) -> dict:
        return {
            "point": [self.point.v1, self.point.v2],
            "bandwidth": [self.bandwidth.b1, self.bandwidth.b2],
            "m": self.m,
            "p": self.p,
            "window": self.window,
            "grid_count": self.grid_count,
            "pair": list(self.pair),
        }


@dataclass(frozen=True)
class EstimateResult:
    local: SpectrumEstimate | None
    global_: SpectrumEstimate | None
    correlations: LocalCorrelationSet | None


def estimate_pair_spectra(
    pseudo: PseudoNormalizedSeries,
    config: EstimationConfig,
    want_local: bool = True,
    want_global: bool = True,
) -> EstimateResult:
    """Local and global m-truncated spectra of one column pair.

    When the two pair members name the same column the auto-case convention
    applies (lag-0 local correlation fixed at 1).
    """
    k, l = config.pair
    zk = pseudo.column(k)
    zl = pseudo.column(l)
    grid = config.grid()
    corrs = None
    local = None
    global_ = None
    if want_local:
        same = (k == l) or (zk is zl)
        if same:
            corrs = local_auto_correlations(
                zk, config.point, config.bandwidth, config.m, config.p
            )
        else:
            corrs = local_cross_correlations(
                zk, zl, config.point, config.bandwidth, config.m, config.p
            )
        local = local_cross_spectrum(corrs, config.window, grid, pair=config.pair)
    if want_global:
        global_ = global_cross_spectrum(
            zk, zl, config.m, config.window, grid, pair=config.pair
        )
    return EstimateResult(local=local, global_=global_, correlations=corrs)
