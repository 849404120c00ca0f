"""Lag-window synthesis of m-truncated cross-spectra and derived curves.

A correlation set (lags 0..m at v, lags 1..m at the reflected point) is
folded into the complex spectrum

    f(w) = rho(0) + sum_h lam(h) [ rho_refl(h) e^{+2 pi i w h}
                                 + rho_fwd(h)  e^{-2 pi i w h} ],

from which the cospectrum (real part), quadrature spectrum (negated
imaginary part), amplitude (modulus) and phase (argument) follow.  The
trigonometric factors are evaluated through sinpi/cospi-style helpers with
exact argument reduction, so the quadrature spectrum is identically 0.0 at
frequencies 0 and 1/2 and the discrete cosine orthogonality used by the
full-period mean identity cancels bitwise.

Synthesis is direct O(m * N_omega): m is small and the frequency grid is
arbitrary, so an FFT buys nothing here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .local_gaussian import (
    Bandwidth,
    LocalCorrelationSet,
    Point,
    local_auto_correlations,
    local_cross_correlations,
)
from .timeseries import lag_pairs


def tukey_hanning(h, m: int):
    """Tukey-Hanning lag-window weight 0.5 * (1 + cos(pi h / m)) for |h| <= m."""
    if m < 1:
        raise ValueError("truncation m must be >= 1")
    h = np.asarray(h, dtype=float)
    inside = np.abs(h) <= m
    out = np.where(inside, 0.5 * (1.0 + np.cos(np.pi * h / m)), 0.0)
    return out if out.ndim else float(out)


def bartlett_window(h, m: int):
    """Triangular lag-window weight 1 - |h|/(m + 1) for |h| <= m."""
    if m < 1:
        raise ValueError("truncation m must be >= 1")
    h = np.asarray(h, dtype=float)
    out = np.where(np.abs(h) <= m, 1.0 - np.abs(h) / (m + 1), 0.0)
    return out if out.ndim else float(out)


def uniform_window(h, m: int):
    """Truncation-only lag window: 1 for |h| <= m, else 0."""
    if m < 1:
        raise ValueError("truncation m must be >= 1")
    h = np.asarray(h, dtype=float)
    out = np.where(np.abs(h) <= m, 1.0, 0.0)
    return out if out.ndim else float(out)


LAG_WINDOWS = {
    "tukey-hanning": tukey_hanning,
    "bartlett": bartlett_window,
    "uniform": uniform_window,
}


def lag_window(name: str):
    """Look up a lag-window function by name."""
    try:
        return LAG_WINDOWS[name]
    except KeyError:
        raise ValueError(
            f"unknown lag window {name!r}; available: {sorted(LAG_WINDOWS)}"
        ) from None


def _sinpi(x: np.ndarray) -> np.ndarray:
    """sin(pi x) with exact reduction: exact zeros at integers, exact sign pairing."""
    x = np.asarray(x, dtype=float)
    r = np.remainder(x, 2.0)
    sign = np.where(r > 1.0, -1.0, 1.0)
    t = np.where(r > 1.0, r - 1.0, r)
    t = np.where(t > 0.5, 1.0 - t, t)
    return sign * np.sin(np.pi * t)


def _cospi(x: np.ndarray) -> np.ndarray:
    """cos(pi x) with exact reduction: exact zeros at half-integers."""
    x = np.asarray(x, dtype=float)
    r = np.remainder(x, 2.0)
    r = np.where(r > 1.0, 2.0 - r, r)
    sign = np.where(r > 0.5, -1.0, 1.0)
    u = np.where(r > 0.5, 1.0 - r, r)
    out = sign * np.cos(np.pi * u)
    return np.where(u == 0.5, 0.0, out)


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing frequencies within [0, 1/2]."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or len(values) < 2:
            raise ValueError("grid needs at least two frequencies")
        if values[0] < 0.0 or values[-1] > 0.5:
            raise ValueError("frequencies must lie within [0, 0.5]")
        if np.any(np.diff(values) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def default(cls, count: int = 1024) -> "FrequencyGrid":
        """Equispaced grid on [0, 1/2] including both endpoints."""
        return cls(np.linspace(0.0, 0.5, count))

    @classmethod
    def full_period(cls, n_full: int) -> "FrequencyGrid":
        """The [0, 1/2] half of an n_full-point full-period grid (j / n_full).

        With n_full an even power of two the grid supports the exact discrete
        orthogonality identities: each interior point stands for itself and
        its mirror 1 - w, so full-period sums weight interior points twice.
        """
        if n_full % 2 != 0:
            raise ValueError("n_full must be even")
        return cls(np.arange(n_full // 2 + 1) / n_full)


@dataclass(frozen=True)
class SpectrumEstimate:
    """Complex spectrum over a grid plus the derived real curves.

    co = Re f, quad = -Im f, amplitude = |f|, phase = Arg f in (-pi, pi].
    """

    grid: FrequencyGrid
    values: np.ndarray  # complex
    co: np.ndarray
    quad: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    kind: str  # "local" | "global"
    pair: tuple = (0, 1)
    point: Point | None = None
    bandwidth: Bandwidth | None = None
    m: int = 0
    order: int = 5
    window: str = "tukey-hanning"
    converged_all: bool = True

    @property
    def omega(self) -> np.ndarray:
        return self.grid.values

    def to_dict(self) -> dict:
        return {
            "omega": [float(x) for x in self.grid.values],
            "co": [float(x) for x in self.co],
            "quad": [float(x) for x in self.quad],
            "amplitude": [float(x) for x in self.amplitude],
            "phase": [float(x) for x in self.phase],
            "re": [float(x) for x in self.values.real],
            "im": [float(x) for x in self.values.imag],
            "kind": self.kind,
            "pair": list(self.pair),
            "point": None if self.point is None else [self.point.v1, self.point.v2],
            "bandwidth": None
            if self.bandwidth is None
            else [self.bandwidth.b1, self.bandwidth.b2],
            "m": self.m,
            "order": self.order,
            "window": self.window,
            "converged_all": self.converged_all,
        }


def _fold_curves(rho0, rho_fwd, rho_rev, lam, omegas):
    """Co and quad curves of the folded m-truncated spectrum.

    rho_fwd are the lag 1..m correlations at v (factor e^{-2 pi i w h}),
    rho_rev the lag 1..m correlations at the reflected point (factor
    e^{+2 pi i w h}); lam are the window weights for lags 1..m.
    """
    co = np.full(len(omegas), float(rho0))
    quad = np.zeros(len(omegas))
    for idx in range(len(rho_fwd)):
        h = idx + 1
        x = (2.0 * omegas) * h
        c = _cospi(x)
        s = _sinpi(x)
        co = co + (lam[idx] * (rho_fwd[idx] + rho_rev[idx])) * c
        quad = quad + (lam[idx] * (rho_fwd[idx] - rho_rev[idx])) * s
    return co, quad


def _assemble(co, quad, grid, **config) -> SpectrumEstimate:
    values = co - 1j * quad
    amplitude = np.hypot(co, quad)
    phase = np.arctan2(-quad, co)
    phase = np.where(phase == -np.pi, np.pi, phase)  # Arg convention (-pi, pi]
    return SpectrumEstimate(
        grid=grid, values=values, co=co, quad=quad, amplitude=amplitude, phase=phase,
        **config,
    )


def local_cross_spectrum(
    corrs: LocalCorrelationSet,
    window: str = "tukey-hanning",
    grid: FrequencyGrid | None = None,
    pair: tuple = (0, 1),
) -> SpectrumEstimate:
    """Fold a local correlation set into the m-truncated cross-spectrum."""
    if grid is None:
        grid = FrequencyGrid.default()
    m = corrs.m
    lam = lag_window(window)(np.arange(1, m + 1), m)
    co, quad = _fold_curves(
        corrs.rho_forward[0], corrs.rho_forward[1:], corrs.rho_reflected, lam, grid.values
    )
    return _assemble(
        co,
        quad,
        grid,
        kind="local",
        pair=pair,
        point=corrs.point,
        bandwidth=corrs.bandwidth,
        m=m,
        order=corrs.order,
        window=window,
        converged_all=corrs.all_converged,
    )


def local_auto_spectrum(
    zk: np.ndarray,
    v: Point,
    b: Bandwidth,
    m: int,
    p: int = 5,
    window: str = "tukey-hanning",
    grid: FrequencyGrid | None = None,
    pair: tuple = (0, 0),
) -> SpectrumEstimate:
    """Auto-case spectrum of a single column; lag 0 correlation is 1 by convention."""
    corrs = local_auto_correlations(zk, v, b, m, p)
    return local_cross_spectrum(corrs, window=window, grid=grid, pair=pair)


def _pearson(pairs) -> float:
    x = pairs.pairs
    cx = x[:, 0] - x[:, 0].mean()
    cy = x[:, 1] - x[:, 1].mean()
    denom = np.sqrt((cx @ cx) * (cy @ cy))
    if denom == 0:
        return 0.0
    return float((cx @ cy) / denom)


def global_cross_spectrum(
    zk: np.ndarray,
    zl: np.ndarray,
    m: int,
    window: str = "tukey-hanning",
    grid: FrequencyGrid | None = None,
    pair: tuple = (0, 1),
) -> SpectrumEstimate:
    """Ordinary m-truncated cross-spectrum from Pearson correlations.

    Uses the same folding formula as the local estimate with the plain
    correlations of the lag pair sets; this is the global comparison curve
    plotted against the local one.
    """
    zk = np.asarray(zk, dtype=float)
    zl = np.asarray(zl, dtype=float)
    if m < 0 or m >= len(zk):
        raise ValueError(f"truncation m={m} out of range for n={len(zk)}")
    if grid is None:
        grid = FrequencyGrid.default()
    rho_fwd = np.array([_pearson(lag_pairs(zk, zl, h)) for h in range(m + 1)])
    rho_rev = np.array([_pearson(lag_pairs(zl, zk, h)) for h in range(1, m + 1)])
    lam = lag_window(window)(np.arange(1, m + 1), m)
    co, quad = _fold_curves(rho_fwd[0], rho_fwd[1:], rho_rev, lam, grid.values)
    return _assemble(
        co, quad, grid, kind="global", pair=pair, m=m, order=0, window=window
    )


def conjugate_fold_check(
    corrs: LocalCorrelationSet,
    window: str = "tukey-hanning",
    grid: FrequencyGrid | None = None,
    tol: float = 1e-12,
) -> bool:
    """Verify f_{kl|v}(w) == conj(f_{lk|v-breve}(w)) on the grid.

    The swapped spectrum is rebuilt from the same correlation set with the
    forward and reflected roles exchanged (the lag-0 value is shared), so
    the check exercises the algebra of the folding formula.
    """
    if grid is None:
        grid = FrequencyGrid.default()
    m = corrs.m
    lam = lag_window(window)(np.arange(1, m + 1), m)
    co, quad = _fold_curves(
        corrs.rho_forward[0], corrs.rho_forward[1:], corrs.rho_reflected, lam, grid.values
    )
    co_swap, quad_swap = _fold_curves(
        corrs.rho_forward[0], corrs.rho_reflected, corrs.rho_forward[1:], lam, grid.values
    )
    f = co - 1j * quad
    f_swap = co_swap - 1j * quad_swap
    return bool(np.max(np.abs(f - np.conj(f_swap))) < tol)
