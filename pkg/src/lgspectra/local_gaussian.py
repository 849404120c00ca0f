"""Kernel-weighted local likelihood fits of bivariate Gaussian approximations.

At a point v on the pseudo-normalised scale, the joint density of a lag-h
pair set is approximated by a bivariate Gaussian with either five free
parameters (mu1, mu2, sigma1, sigma2, rho) or a single free correlation
parameter rho.  The fitted penalty is

    Q(theta) = - sum_t K_b(x_t - v) log psi_p(x_t; theta)
               + n * integral K_b(y - v) psi_p(y; theta) dy,

where K_b is a product of scaled standard normal densities.  With that
kernel the integral term is available in closed form: it is the density at
v of a bivariate Gaussian with mean mu and covariance Sigma_theta +
diag(b1^2, b2^2), so no quadrature enters the optimisation loop.

Both the data term and the integral term are log-Gaussians, so the penalty
and its analytic gradient and Hessian depend on the pair set only through
the kernel-weighted moments (sum w, sum w*x, sum w*x x').  The moments are
accumulated once per fit and every Newton iteration costs O(1) in the
sample size.

The correlation parameter of the fitted Gaussian is the local Gaussian
correlation of the pair set at v.  Fitting the swapped pairs at the
diagonally reflected point v-breve = (v2, v1) gives the companion estimate
used by the spectrum folding formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import LagPairSet, lag_pairs

RHO_BOUND = 0.999  # |rho| clamp during iteration
INIT_RHO_CLAMP = 0.95
SCORE_TOL = 1e-6
MAX_ITER = 50
WEIGHT_FLOOR = 5.0  # minimum sum of kernel weights * (b1*b2) to attempt a fit
SIGMA_MIN = 1e-6

_TWO_PI = 2.0 * np.pi


class DegenerateWeightsError(ValueError):
    """All kernel weights are (numerically) zero: no local information at v."""


@dataclass(frozen=True)
class Point:
    """Point of investigation on the pseudo-normalised scale."""

    v1: float
    v2: float

    def __post_init__(self):
        if not (np.isfinite(self.v1) and np.isfinite(self.v2)):
            raise ValueError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.v1, self.v2], dtype=float)

    @property
    def reflected(self) -> "Point":
        return Point(self.v2, self.v1)

    @property
    def is_diagonal(self) -> bool:
        return self.v1 == self.v2


@dataclass(frozen=True)
class Bandwidth:
    b1: float
    b2: float

    def __post_init__(self):
        if not (self.b1 > 0 and self.b2 > 0):
            raise ValueError("bandwidths must be positive")


def reflect(v: Point) -> Point:
    """Swap the coordinates: the diagonal reflection of v.  An involution."""
    return v.reflected


@dataclass(frozen=True)
class GaussianParam:
    """Parameters of the approximating bivariate Gaussian.

    order 5 uses all of (mu1, mu2, sigma1, sigma2, rho); order 1 fixes the
    means at 0 and the standard deviations at 1, leaving only rho.
    """

    order: int
    rho: float
    mu1: float = 0.0
    mu2: float = 0.0
    sigma1: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if self.order not in (1, 5):
            raise ValueError("order must be 1 or 5")
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigma1, sigma2 must be positive")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if self.order == 1 and (
            self.mu1 != 0.0 or self.mu2 != 0.0 or self.sigma1 != 1.0 or self.sigma2 != 1.0
        ):
            raise ValueError("order-1 parameters fix mu=0 and sigma=1")

    def as_array(self) -> np.ndarray:
        if self.order == 1:
            return np.array([self.rho], dtype=float)
        return np.array(
            [self.mu1, self.mu2, self.sigma1, self.sigma2, self.rho], dtype=float
        )

    @classmethod
    def from_array(cls, order: int, arr) -> "GaussianParam":
        arr = np.asarray(arr, dtype=float)
        if order == 1:
            return cls(order=1, rho=float(arr[0]))
        return cls(
            order=5,
            mu1=float(arr[0]),
            mu2=float(arr[1]),
            sigma1=float(arr[2]),
            sigma2=float(arr[3]),
            rho=float(arr[4]),
        )


@dataclass(frozen=True)
class FitResult:
    theta: GaussianParam
    converged: bool
    iterations: int
    score_norm: float


@dataclass(frozen=True)
class LocalCorrelationSet:
    """Local Gaussian cross-correlations for lags 0..m at v and 1..m at v-breve."""

    point: Point
    bandwidth: Bandwidth
    order: int
    rho_forward: np.ndarray  # length m + 1, lags 0..m at v, pair order (k, l)
    rho_reflected: np.ndarray  # length m, lags 1..m at reflected point, order (l, k)
    flags_forward: np.ndarray  # bool, converged per lag
    flags_reflected: np.ndarray

    @property
    def m(self) -> int:
        return len(self.rho_reflected)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.flags_forward) and np.all(self.flags_reflected))

    def to_dict(self) -> dict:
        return {
            "point": [self.point.v1, self.point.v2],
            "bandwidth": [self.bandwidth.b1, self.bandwidth.b2],
            "order": self.order,
            "rho_forward": [float(x) for x in self.rho_forward],
            "rho_reflected": [float(x) for x in self.rho_reflected],
            "flags_forward": [bool(x) for x in self.flags_forward],
            "flags_reflected": [bool(x) for x in self.flags_reflected],
        }


def kernel_weight(w, v: Point, b: Bandwidth):
    """Scaled product-Gaussian kernel (1/(b1 b2)) K((w - v)/b).

    K is the product of two univariate standard normal densities, so the
    weight integrates to one over the plane and K(0, 0) = 1/(2 pi).
    Accepts a single pair (length-2) or an array of pairs (n, 2).
    """
    w = np.asarray(w, dtype=float)
    u1 = (w[..., 0] - v.v1) / b.b1
    u2 = (w[..., 1] - v.v2) / b.b2
    return np.exp(-0.5 * (u1 * u1 + u2 * u2)) / (_TWO_PI * b.b1 * b.b2)


# -- penalty machinery -------------------------------------------------------
#
# Parameter vector layout: order 5 -> (mu1, mu2, sigma1, sigma2, rho),
# order 1 -> (rho,).  Derivatives with respect to the covariance-shaped
# parameters are expressed through dC/ds and d2C/(ds ds') for
# C = Sigma_theta + diag(beta1, beta2).


def _cov_and_derivs(theta: np.ndarray, order: int, beta1: float, beta2: float):
    """Covariance C, its inverse, and first/second parameter derivatives."""
    if order == 1:
        rho = theta[0]
        mu = np.zeros(2)
        c = np.array([[1.0 + beta1, rho], [rho, 1.0 + beta2]])
        dc = [np.array([[0.0, 1.0], [1.0, 0.0]])]
        ddc = {(0, 0): None}
        cov_idx = [0]
        mu_idx = []
    else:
        mu1, mu2, s1, s2, rho = theta
        mu = np.array([mu1, mu2])
        c = np.array(
            [[s1 * s1 + beta1, rho * s1 * s2], [rho * s1 * s2, s2 * s2 + beta2]]
        )
        d_s1 = np.array([[2.0 * s1, rho * s2], [rho * s2, 0.0]])
        d_s2 = np.array([[0.0, rho * s1], [rho * s1, 2.0 * s2]])
        d_rho = np.array([[0.0, s1 * s2], [s1 * s2, 0.0]])
        dc = [d_s1, d_s2, d_rho]
        ddc = {
            (0, 0): np.array([[2.0, 0.0], [0.0, 0.0]]),
            (0, 1): np.array([[0.0, rho], [rho, 0.0]]),
            (0, 2): np.array([[0.0, s2], [s2, 0.0]]),
            (1, 1): np.array([[0.0, 0.0], [0.0, 2.0]]),
            (1, 2): np.array([[0.0, s1], [s1, 0.0]]),
            (2, 2): None,
        }
        cov_idx = [2, 3, 4]
        mu_idx = [0, 1]
    det = c[0, 0] * c[1, 1] - c[0, 1] * c[1, 0]
    if det <= 0:
        raise ValueError("covariance not positive definite")
    cinv = np.array([[c[1, 1], -c[0, 1]], [-c[1, 0], c[0, 0]]]) / det
    return mu, c, cinv, det, dc, ddc, mu_idx, cov_idx


def _log_gauss_weighted(theta, order, sw, sx, sxx, beta1, beta2, want_hess):
    """Weighted sum of log N(x; mu, C) over observations with moments (sw, sx, sxx).

    Returns (value, gradient, hessian) of sum_t w_t log N(x_t; mu, C(theta)),
    where C = Sigma_theta + diag(beta1, beta2).  The hessian is None when
    not requested.
    """
    nparam = len(theta)
    mu, c, cinv, det, dc, ddc, mu_idx, cov_idx = _cov_and_derivs(
        theta, order, beta1, beta2
    )
    sdelta = sx - sw * mu
    sdd = sxx - np.outer(mu, sx) - np.outer(sx, mu) + sw * np.outer(mu, mu)

    value = sw * (-np.log(_TWO_PI) - 0.5 * np.log(det)) - 0.5 * np.trace(cinv @ sdd)

    grad = np.zeros(nparam)
    q = cinv @ sdelta
    for g_pos, k in enumerate(mu_idx):
        grad[k] = q[g_pos]
    cinv_dc = [cinv @ d for d in dc]
    for pos, k in enumerate(cov_idx):
        m = cinv_dc[pos] @ cinv
        grad[k] = 0.5 * (np.trace(m @ sdd) - sw * np.trace(cinv_dc[pos]))

    if not want_hess:
        return value, grad, None

    hess = np.zeros((nparam, nparam))
    if mu_idx:
        hess[np.ix_(mu_idx, mu_idx)] = -sw * cinv
        for pos, k in enumerate(cov_idx):
            cross = -(cinv_dc[pos] @ cinv) @ sdelta
            for g_pos, j in enumerate(mu_idx):
                hess[j, k] = hess[k, j] = cross[g_pos]
    for a, ka in enumerate(cov_idx):
        for b_, kb in enumerate(cov_idx):
            if kb < ka:
                continue
            key = (a, b_) if (a, b_) in ddc else (b_, a)
            dd = ddc[key]
            term = 0.0
            if dd is not None:
                term += np.trace(cinv @ dd @ cinv @ sdd)
                term -= sw * np.trace(cinv @ dd)
            mab = cinv_dc[a] @ cinv_dc[b_]
            term += sw * np.trace(mab)
            term -= np.trace((cinv_dc[b_] @ cinv_dc[a] + mab) @ cinv @ sdd)
            hess[ka, kb] = hess[kb, ka] = 0.5 * term
    return value, grad, hess


def _weighted_moments(pairs: np.ndarray, weights: np.ndarray):
    sw = float(np.sum(weights))
    sx = weights @ pairs
    sxx = (pairs * weights[:, None]).T @ pairs
    return sw, sx, sxx


def _penalty_parts(theta, order, moments, npairs, v, b, want_hess):
    """Value, gradient and (optionally) Hessian of the local penalty."""
    sw, sx, sxx = moments
    rho = theta[-1]
    if not -1.0 < rho < 1.0:
        raise ValueError("rho at boundary: |rho| >= 1")
    val_d, grad_d, hess_d = _log_gauss_weighted(
        theta, order, sw, sx, sxx, 0.0, 0.0, want_hess
    )
    # integral term: closed form, the log-Gaussian evaluated at v with the
    # kernel variances added to the covariance
    vv = v.as_array()
    val_i, grad_i, hess_i = _log_gauss_weighted(
        theta,
        order,
        1.0,
        vv,
        np.outer(vv, vv),
        b.b1 * b.b1,
        b.b2 * b.b2,
        want_hess,
    )
    integral = np.exp(val_i)
    value = -val_d + npairs * integral
    grad = -grad_d + npairs * integral * grad_i
    hess = None
    if want_hess:
        hess = -hess_d + npairs * integral * (np.outer(grad_i, grad_i) + hess_i)
    return value, grad, hess


def _as_pairs(pairs) -> np.ndarray:
    if isinstance(pairs, LagPairSet):
        return pairs.pairs
    arr = np.asarray(pairs, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("pairs must have shape (count, 2)")
    return arr


def penalty(pairs, v: Point, b: Bandwidth, theta: GaussianParam) -> float:
    """Local penalty -sum_t K_b(x_t - v) log psi(x_t) + n * int K_b(y - v) psi(y) dy."""
    arr = _as_pairs(pairs)
    w = kernel_weight(arr, v, b) if len(arr) else np.zeros(0)
    moments = _weighted_moments(arr, w)
    val, _, _ = _penalty_parts(theta.as_array(), theta.order, moments, len(arr), v, b, False)
    return float(val)


def penalty_gradient(pairs, v: Point, b: Bandwidth, theta: GaussianParam) -> np.ndarray:
    """Analytic gradient of the penalty with respect to the parameter vector."""
    arr = _as_pairs(pairs)
    w = kernel_weight(arr, v, b) if len(arr) else np.zeros(0)
    moments = _weighted_moments(arr, w)
    _, grad, _ = _penalty_parts(theta.as_array(), theta.order, moments, len(arr), v, b, False)
    return grad


def penalty_hessian(pairs, v: Point, b: Bandwidth, theta: GaussianParam) -> np.ndarray:
    """Analytic Hessian of the penalty with respect to the parameter vector."""
    arr = _as_pairs(pairs)
    w = kernel_weight(arr, v, b) if len(arr) else np.zeros(0)
    moments = _weighted_moments(arr, w)
    _, _, hess = _penalty_parts(theta.as_array(), theta.order, moments, len(arr), v, b, True)
    return hess


def _moment_init(order: int, moments) -> np.ndarray:
    """Kernel-weighted means/SDs/correlation, rho clamped to +-0.95."""
    sw, sx, sxx = moments
    if order == 1:
        denom = np.sqrt(max(sxx[0, 0] * sxx[1, 1], 1e-300))
        rho = sxx[0, 1] / denom if denom > 0 else 0.0
        return np.array([np.clip(rho, -INIT_RHO_CLAMP, INIT_RHO_CLAMP)])
    mean = sx / sw
    cov = sxx / sw - np.outer(mean, mean)
    var1 = max(cov[0, 0], 1e-8)
    var2 = max(cov[1, 1], 1e-8)
    rho = cov[0, 1] / np.sqrt(var1 * var2)
    rho = np.clip(rho, -INIT_RHO_CLAMP, INIT_RHO_CLAMP)
    return np.array([mean[0], mean[1], np.sqrt(var1), np.sqrt(var2), rho])


def _standard_init(order: int, moments) -> np.ndarray:
    """Standard-marginal start (mu = 0, sigma = 1) with the weighted correlation.

    On pseudo-normalised data the fitted means and scales usually land close
    to 0 and 1, so this start rescues fits whose local moment estimates are
    badly skewed (deep tail points of strongly non-Gaussian samples).
    """
    sw, sx, sxx = moments
    cov = sxx / sw - np.outer(sx / sw, sx / sw)
    denom = np.sqrt(max(cov[0, 0] * cov[1, 1], 1e-300))
    rho = np.clip(cov[0, 1] / denom, -INIT_RHO_CLAMP, INIT_RHO_CLAMP)
    if order == 1:
        return np.array([rho])
    return np.array([0.0, 0.0, 1.0, 1.0, rho])


def _project(theta: np.ndarray, order: int) -> np.ndarray | None:
    """Clamp rho into (-RHO_BOUND, RHO_BOUND); reject invalid sigmas."""
    out = theta.copy()
    out[-1] = np.clip(out[-1], -RHO_BOUND, RHO_BOUND)
    if order == 5 and (out[2] < SIGMA_MIN or out[3] < SIGMA_MIN):
        return None
    if not np.all(np.isfinite(out)):
        return None
    return out


def fit_local_gaussian(
    pairs,
    v: Point,
    b: Bandwidth,
    p: int = 5,
    init: GaussianParam | None = None,
    max_iter: int = MAX_ITER,
    tol: float = SCORE_TOL,
) -> FitResult:
    """Minimise the local penalty by damped Newton with analytic derivatives.

    Newton directions that are not descent directions fall back to steepest
    descent; every step is backtracked until the penalty decreases and the
    parameters stay valid.  Convergence means the gradient infinity-norm
    drops below ``tol`` within ``max_iter`` iterations; failure to converge
    is reported through the flag, never as an exception.

    Raises
    ------
    DegenerateWeightsError
        when the kernel weights vanish entirely at v.
    ValueError
        when fewer effective observations than the floor requires and no
        usable initial value can be formed.
    """
    if p not in (1, 5):
        raise ValueError("p must be 1 or 5")
    arr = _as_pairs(pairs)
    if len(arr) == 0:
        raise DegenerateWeightsError("empty pair set")
    w = kernel_weight(arr, v, b)
    sum_w = float(np.sum(w))
    effective = sum_w * b.b1 * b.b2
    if effective <= 1e-12:
        raise DegenerateWeightsError(
            f"kernel weights vanish at v=({v.v1:g},{v.v2:g}); no observations nearby"
        )
    moments = _weighted_moments(arr, w)
    theta = init.as_array() if init is not None else _moment_init(p, moments)
    theta = _project(theta, p)
    if theta is None:
        theta = _moment_init(p, moments)
    if effective < WEIGHT_FLOOR:
        # too little local mass: flag the fit instead of attempting it
        return FitResult(
            theta=GaussianParam.from_array(p, theta),
            converged=False,
            iterations=0,
            score_norm=np.inf,
        )

    npairs = len(arr)
    theta, score, iters_used = _newton_minimise(
        theta, p, moments, npairs, v, b, max_iter, tol
    )
    if score >= tol:
        # one restart from the standard-marginal start often rescues fits
        # whose local moment initialisation was badly placed
        retry0 = _standard_init(p, moments)
        if not np.array_equal(retry0, theta):
            theta2, score2, iters2 = _newton_minimise(
                retry0, p, moments, npairs, v, b, max_iter, tol
            )
            iters_used += iters2
            if score2 < score:
                theta, score = theta2, score2
    return FitResult(
        theta=GaussianParam.from_array(p, theta),
        converged=bool(score < tol),
        iterations=iters_used,
        score_norm=score,
    )


def _newton_minimise(theta, p, moments, npairs, v, b, max_iter, tol):
    """Damped Newton with ridge-regularised fallback directions.

    A Newton step that fails to be a descent direction is replaced by the
    solution of (H + lam I) step = -grad with an escalating ridge, which
    interpolates between Newton and steepest descent.  Steps are backtracked
    until the penalty decreases (Armijo) and the parameters stay valid.
    """
    value, grad, hess = _penalty_parts(theta, p, moments, npairs, v, b, True)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        score = float(np.max(np.abs(grad)))
        if score < tol:
            return theta, score, iterations - 1
        step = None
        try:
            cand = np.linalg.solve(hess, -grad)
            if np.all(np.isfinite(cand)) and float(grad @ cand) < 0:
                step = cand
        except np.linalg.LinAlgError:
            pass
        if step is None:
            scale = max(float(np.max(np.abs(np.diag(hess)))), 1.0)
            lam = 1e-3 * scale
            for _ in range(20):
                try:
                    cand = np.linalg.solve(hess + lam * np.eye(len(theta)), -grad)
                except np.linalg.LinAlgError:
                    cand = None
                if (
                    cand is not None
                    and np.all(np.isfinite(cand))
                    and float(grad @ cand) < 0
                ):
                    step = cand
                    break
                lam *= 10.0
            if step is None:
                step = -grad
        slope = float(grad @ step)
        alpha = 1.0
        moved = False
        for _ in range(40):
            cand = _project(theta + alpha * step, p)
            if cand is not None:
                try:
                    cand_value, cand_grad, cand_hess = _penalty_parts(
                        cand, p, moments, npairs, v, b, True
                    )
                except ValueError:
                    cand_value = np.inf
                if np.isfinite(cand_value) and cand_value <= value + 1e-4 * alpha * slope:
                    theta, value, grad, hess = cand, cand_value, cand_grad, cand_hess
                    moved = True
                    break
            alpha *= 0.5
        if not moved:
            break
    score = float(np.max(np.abs(grad)))
    return theta, score, iterations


def _swap_param(theta: GaussianParam) -> GaussianParam:
    """Coordinate-swapped parameters: the fit of (y, x) pairs at the reflected point."""
    if theta.order == 1:
        return theta
    return GaussianParam(
        order=5,
        mu1=theta.mu2,
        mu2=theta.mu1,
        sigma1=theta.sigma2,
        sigma2=theta.sigma1,
        rho=theta.rho,
    )


def local_cross_correlations(
    zk: np.ndarray,
    zl: np.ndarray,
    v: Point,
    b: Bandwidth,
    m: int,
    p: int = 5,
) -> LocalCorrelationSet:
    """Local Gaussian cross-correlations of lags 0..m at v and 1..m at v-breve.

    Forward fits use the pairs (zk[t+h], zl[t]) at v; reflected fits use the
    swapped pairs (zl[t+h], zk[t]) at the diagonally reflected point.  Each
    lag is warm-started from the previous lag's estimate, which typically
    cuts the Newton iteration count sharply.
    """
    zk = np.asarray(zk, dtype=float)
    zl = np.asarray(zl, dtype=float)
    if m < 0 or m >= len(zk):
        raise ValueError(f"truncation m={m} out of range for n={len(zk)}")
    vr = v.reflected
    rho_f = np.empty(m + 1)
    rho_r = np.empty(m)
    flags_f = np.empty(m + 1, dtype=bool)
    flags_r = np.empty(m, dtype=bool)

    init = None
    lag0_theta = None
    for h in range(m + 1):
        fit = fit_local_gaussian(lag_pairs(zk, zl, h, "kl"), v, b, p, init=init)
        rho_f[h], flags_f[h] = fit.theta.rho, fit.converged
        if fit.converged:
            init = fit.theta  # keep the last converged start across failed lags
            if lag0_theta is None:
                lag0_theta = fit.theta

    init = _swap_param(lag0_theta) if lag0_theta is not None else None
    for h in range(1, m + 1):
        fit = fit_local_gaussian(lag_pairs(zl, zk, h, "lk"), vr, b, p, init=init)
        rho_r[h - 1], flags_r[h - 1] = fit.theta.rho, fit.converged
        if fit.converged:
            init = fit.theta

    return LocalCorrelationSet(
        point=v,
        bandwidth=b,
        order=p,
        rho_forward=rho_f,
        rho_reflected=rho_r,
        flags_forward=flags_f,
        flags_reflected=flags_r,
    )


def local_auto_correlations(
    z: np.ndarray, v: Point, b: Bandwidth, m: int, p: int = 5
) -> LocalCorrelationSet:
    """Auto-case correlation set: lag 0 is 1 by convention, lags 1..m are fitted.

    With a single column the forward and reflected pair sets coincide, so for
    a diagonal point the reflected fits are reused and the resulting spectrum
    is exactly real-valued.
    """
    z = np.asarray(z, dtype=float)
    if m < 0 or m >= len(z):
        raise ValueError(f"truncation m={m} out of range for n={len(z)}")
    rho_f = np.empty(m + 1)
    flags_f = np.empty(m + 1, dtype=bool)
    rho_f[0], flags_f[0] = 1.0, True

    init = None
    for h in range(1, m + 1):
        fit = fit_local_gaussian(lag_pairs(z, z, h, "kl"), v, b, p, init=init)
        rho_f[h], flags_f[h] = fit.theta.rho, fit.converged
        if fit.converged:
            init = fit.theta

    if v.is_diagonal:
        rho_r = rho_f[1:].copy()
        flags_r = flags_f[1:].copy()
    else:
        vr = v.reflected
        rho_r = np.empty(m)
        flags_r = np.empty(m, dtype=bool)
        init = None
        for h in range(1, m + 1):
            fit = fit_local_gaussian(lag_pairs(z, z, h, "lk"), vr, b, p, init=init)
            rho_r[h - 1], flags_r[h - 1] = fit.theta.rho, fit.converged
            if fit.converged:
                init = fit.theta

    return LocalCorrelationSet(
        point=v,
        bandwidth=b,
        order=p,
        rho_forward=rho_f,
        rho_reflected=rho_r,
        flags_forward=flags_f,
        flags_reflected=flags_r,
    )
