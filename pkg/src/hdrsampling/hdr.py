"""Highest density regions: level estimation, PCA bounding box and uniform
acceptance-rejection sampling.

The ``(1 - alpha)``-HDR of a density ``f`` is the superlevel set
``{x : f(x) >= level}`` holding probability ``1 - alpha``. Points are drawn
uniformly in the unit cube, pushed through the affine map

    T(u) = R^T [S (u - 1/2) + o] + mean

onto a box that encloses the HDR, and rejected when ``f(x) <= level``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, special, stats

from .exceptions import (
    BudgetExhaustedError,
    DimensionalityLimitError,
    DomainError,
    InsufficientCoverageError,
)
from .randvec import RandomVector, as_generator

_N_SUBBATCH = 10
_CHUNK = 500_000


@dataclass(frozen=True)
class LevelEstimate:
    level: float | None
    cov: float
    n_used: int


@dataclass(frozen=True, eq=False)
class HdrRegion:
    """HDR of ``rv`` together with its enclosing PCA bounding box.

    ``scale`` holds the box edge lengths (the diagonal of S); ``rotation``
    has the principal directions as rows. ``level`` is ``None`` when the
    density is constant, in which case the box is the marginal support.
    """

    alpha: float
    level: float | None
    rotation: np.ndarray
    scale: np.ndarray
    offset: np.ndarray
    mean: np.ndarray
    rv: RandomVector
    cov: float = 0.0
    n_used: int = 0
    inflation: float = 0.0
    log_level: float = field(init=False)

    def __post_init__(self):
        for name in ("rotation", "scale", "offset", "mean"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.scale <= 0):
            raise ValueError("box edge lengths must be positive")
        lvl = -math.inf if self.level is None else math.log(self.level)
        object.__setattr__(self, "log_level", lvl)

    @property
    def d(self):
        return self.rv.d

    @property
    def scale_matrix(self):
        return np.diag(self.scale)

    def apply_T(self, u):
        """Map unit-cube points into the bounding box (physical space)."""
        u = np.asarray(u, dtype=float)
        return ((u - 0.5) * self.scale + self.offset) @ self.rotation + self.mean

    def inverse_T(self, x):
        """Map physical points to box coordinates (HDR lies in ``[0, 1]^d``)."""
        x = np.asarray(x, dtype=float)
        return ((x - self.mean) @ self.rotation.T - self.offset) / self.scale + 0.5

    def contains(self, x):
        """Strict membership ``f(x) > level`` used by the sampler."""
        logf = self.rv.logpdf(np.atleast_2d(x))
        if self.level is None:
            return np.isfinite(logf)
        return logf > self.log_level

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "level": self.level,
            "cov": self.cov,
            "n_used": self.n_used,
            "inflation": self.inflation,
            "rotation": self.rotation.tolist(),
            "scale": self.scale.tolist(),
            "offset": self.offset.tolist(),
            "mean": self.mean.tolist(),
            "rv": self.rv.to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            alpha=float(data["alpha"]),
            level=None if data.get("level") is None else float(data["level"]),
            rotation=data["rotation"],
            scale=data["scale"],
            offset=data["offset"],
            mean=data["mean"],
            rv=RandomVector.from_dict(data["rv"]),
            cov=float(data.get("cov", 0.0)),
            n_used=int(data.get("n_used", 0)),
            inflation=float(data.get("inflation", 0.0)),
        )


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def gaussian_level(covariance, alpha):
    """Closed-form HDR level of a multivariate normal with ``covariance``."""
    _check_alpha(alpha)
    c = np.atleast_2d(np.asarray(covariance, dtype=float))
    chol = np.linalg.cholesky(c)
    d = c.shape[0]
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    q = stats.chi2.ppf(1.0 - alpha, d)
    return math.exp(-0.5 * d * math.log(2.0 * math.pi) - 0.5 * logdet - 0.5 * q)


def ball_volume(d):
    """Volume of the unit-diameter ball in ``d`` dimensions."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return math.exp(0.5 * d * math.log(math.pi) - d * math.log(2.0) - math.lgamma(0.5 * d + 1.0))


def initial_batch_size(n, d):
    """First acceptance-rejection batch: expected draws for ``n`` hits in the ball."""
    return math.ceil(n / ball_volume(d))


def estimate_level(rv, alpha, cov_target=0.01, seed=0, max_n=20_000_000):
    """Estimate the HDR level as the ``alpha``-quantile of ``f(X)``.

    Draws are added until both the coefficient of variation of the level
    (estimated from 10 disjoint sub-batches) and that of the Monte Carlo
    estimate of ``P(f(X) < level) = alpha`` are below ``cov_target``.
    """
    _check_alpha(alpha)
    if not 0.0 < cov_target <= 0.2:
        raise ValueError("cov_target must lie in (0, 0.2]")
    if rv.has_constant_density:
        return LevelEstimate(None, 0.0, 0)
    rng = as_generator(seed)

    def _round(n):
        return int(math.ceil(n / _N_SUBBATCH) * _N_SUBBATCH)

    n_target = _round(max(10_000, (1.0 - alpha) / (alpha * cov_target**2)))
    n_target = min(n_target, _round(max_n))
    values = np.empty(0)
    while True:
        parts = [values]
        have = values.size
        while have < n_target:
            m = min(_CHUNK, n_target - have)
            parts.append(rv.logpdf(rv.sample(m, rng)))
            have += m
        values = np.concatenate(parts)
        n = values.size
        log_level = np.quantile(values, alpha)
        level = math.exp(log_level)
        blocks = values.reshape(_N_SUBBATCH, -1)
        sub = np.exp(np.quantile(blocks, alpha, axis=1))
        cov_q = float(np.std(sub, ddof=1) / math.sqrt(_N_SUBBATCH) / level)
        cov_p = math.sqrt((1.0 - alpha) / (alpha * n))
        cov = max(cov_q, cov_p)
        est = LevelEstimate(level, cov, n)
        if cov <= cov_target:
            return est
        if n >= max_n:
            raise BudgetExhaustedError(
                f"level CoV {cov:.3g} above target {cov_target:.3g} after {n} draws", est
            )
        grow = max(1.25, 1.1 * (cov / cov_target) ** 2)
        n_target = min(_round(n * grow), _round(max_n))


def _principal_axes(cov):
    """Rows are eigenvectors of ``cov`` sorted by decreasing eigenvalue.

    Each eigenvector has its largest-magnitude entry positive; the last row is
    negated when needed so that the matrix is a proper rotation.
    """
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    v = evecs[:, order]
    for j in range(v.shape[1]):
        k = np.argmax(np.abs(v[:, j]))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
    rot = v.T.copy()
    if np.linalg.det(rot) < 0:
        rot[-1] = -rot[-1]
    return rot


def _refine_extremes(rv, rot, mean, log_level, lo, hi, x_lo, x_hi):
    """Push MC axis extrema outwards to the HDR boundary by local search.

    Works in independent standard-normal space so every iterate stays inside
    the support of the marginals.
    """
    d = rv.d
    lo, hi = lo.copy(), hi.copy()

    def coord(z, j):
        return float((rv.from_standard_normal(z) - mean) @ rot[j])

    def margin(z):
        return float(rv.logpdf(rv.from_standard_normal(z))) - log_level

    for j in range(d):
        for sign, start, cur in ((-1.0, x_lo[j], lo), (1.0, x_hi[j], hi)):
            z0 = rv.to_standard_normal(start)
            if not np.all(np.isfinite(z0)):
                continue
            try:
                res = optimize.minimize(
                    lambda z: -sign * coord(z, j),
                    z0,
                    method="SLSQP",
                    constraints=[{"type": "ineq", "fun": margin}],
                    options={"maxiter": 200, "ftol": 1e-12},
                )
            except (ValueError, ArithmeticError):
                continue
            z = res.x
            if not np.all(np.isfinite(z)) or margin(z) < -1e-9:
                continue
            v = coord(z, j)
            if sign < 0 and v < cur[j]:
                cur[j] = v
            elif sign > 0 and v > cur[j]:
                cur[j] = v
    return lo, hi


def fit_bounding_box(rv, level, n_box=100_000, inflation=0.02, seed=0, alpha=float("nan"),
                     refine=True, estimate=None):
    """Build the PCA bounding box enclosing ``{f > level}``.

    ``level=None`` means constant density: the box is the marginal support.
    With ``refine`` the Monte Carlo extrema along each principal axis are
    tightened onto the HDR boundary by a constrained local search before the
    half-extents are inflated by the factor ``1 + inflation``.
    """
    if n_box < 10_000:
        raise ValueError("n_box must be at least 10^4")
    d = rv.d
    cov_est = 0.0 if estimate is None else estimate.cov
    n_used = 0 if estimate is None else estimate.n_used
    if level is None:
        lo, hi = rv.support
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainError("constant-density region needs a bounded support")
        return HdrRegion(alpha, None, np.eye(d), hi - lo, np.zeros(d), 0.5 * (lo + hi), rv,
                         cov_est, n_used, 0.0)
    rng = as_generator(seed)
    rot = _principal_axes(rv.covariance_estimate(max(n_box, 10 * d), rng))
    mean = rv.mean
    log_level = math.log(level)
    x = rv.sample(n_box, rng)
    x = x[rv.logpdf(x) > log_level]
    if x.shape[0] < d + 1:
        raise InsufficientCoverageError(
            f"only {x.shape[0]} of {n_box} draws have density above the level"
        )
    v = (x - mean) @ rot.T
    lo, hi = v.min(axis=0), v.max(axis=0)
    if refine:
        lo, hi = _refine_extremes(rv, rot, mean, log_level, lo, hi,
                                  x[v.argmin(axis=0)], x[v.argmax(axis=0)])
    offset = 0.5 * (lo + hi)
    scale = (hi - lo) * (1.0 + inflation)
    return HdrRegion(alpha, level, rot, scale, offset, mean, rv, cov_est, n_used, inflation)


def build_region(rv, alpha, cov_target=0.01, seed=0, n_box=100_000, inflation=0.02,
                 refine=True, max_n=20_000_000):
    """Level estimation followed by bounding-box construction."""
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    s_level, s_box = ss.spawn(2)
    est = estimate_level(rv, alpha, cov_target, np.random.default_rng(s_level), max_n=max_n)
    return fit_bounding_box(rv, est.level, n_box, inflation, np.random.default_rng(s_box),
                            alpha=alpha, refine=refine, estimate=est)


def gaussian_region(rv, alpha, inflation=0.0):
    """Exact HDR and bounding box of an all-normal random vector."""
    cov = rv.gaussian_covariance()
    level = gaussian_level(cov, alpha)
    rot = _principal_axes(cov)
    half = np.sqrt(stats.chi2.ppf(1.0 - alpha, rv.d) * np.diag(rot @ cov @ rot.T))
    return HdrRegion(alpha, level, rot, 2.0 * half * (1.0 + inflation), np.zeros(rv.d),
                     rv.mean, rv, 0.0, 0, inflation)


def apply_T(region, u):
    return region.apply_T(u)


def sample_hdr(region, n, seed, acceptance_floor=1e-6, chunk=_CHUNK):
    """Draw exactly ``n`` points uniformly in the HDR by acceptance-rejection.

    The first batch holds ``ceil(n / vol(B_d))`` unit-cube draws; each failed
    batch is replaced by a fresh batch of twice the size. The first ``n``
    accepted points in generation order are returned.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = as_generator(seed)
    d = region.d
    if region.level is None:
        return region.apply_T(rng.random((n, d)))
    batch = initial_batch_size(n, d)
    drawn = accepted_total = 0
    while True:
        kept, count, done = [], 0, 0
        while done < batch and count < n:
            m = min(chunk, batch - done)
            x = region.apply_T(rng.random((m, d)))
            x = x[region.rv.logpdf(x) > region.log_level]
            kept.append(x)
            count += x.shape[0]
            done += m
        drawn += done
        accepted_total += count
        if count >= n:
            return np.concatenate(kept)[:n]
        rate = accepted_total / drawn
        if drawn >= 3.0 / acceptance_floor and rate < acceptance_floor:
            raise DimensionalityLimitError(
                f"acceptance rate {rate:.2e} below floor {acceptance_floor:.0e} in d={d}; "
                "use a smaller dimension or a larger alpha"
            )
        batch *= 2


def sample_filtered(rv, level, n, seed, chunk=100_000):
    """First ``n`` natural draws with density above ``level`` (for comparison)."""
    rng = as_generator(seed)
    log_level = math.log(level)
    kept, count = [], 0
    while count < n:
        x = rv.sample(chunk, rng)
        x = x[rv.logpdf(x) > log_level]
        kept.append(x)
        count += x.shape[0]
    return np.concatenate(kept)[:n]


def ks_statistic(z):
    """Sup-distance between the empirical cdf of ``z`` and the U(0, 1) cdf."""
    z = np.sort(np.asarray(z, dtype=float))
    n = z.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - z), np.max(z - (i - 1) / n)))


def radial_scores(region, samples):
    """Map points of a Gaussian HDR to ``(|L^-1 (x - mu)| / r)^d``.

    The radius ``r`` is the Mahalanobis radius of the region's level, which
    equals ``sqrt(chi2_{d, 1 - alpha})`` for the closed-form level.
    """
    rv = region.rv
    if not rv.is_gaussian:
        raise DomainError("radial uniformity test needs a Gaussian random vector")
    if region.level is None:
        raise DomainError("region has no density level")
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    d = rv.d
    cov = rv.gaussian_covariance()
    chol = np.linalg.cholesky(cov)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    r2 = -2.0 * (region.log_level + 0.5 * d * math.log(2.0 * math.pi) + 0.5 * logdet)
    y = linalg.solve_triangular(chol, (x - rv.mean).T, lower=True)
    rho2 = np.sum(y * y, axis=0)
    return (rho2 / r2) ** (0.5 * d)


def ks_uniformity(region, samples):
    """Kolmogorov-Smirnov test of radial uniformity inside a Gaussian HDR.

    Returns ``(statistic, p_value)`` with the asymptotic Kolmogorov p-value.
    """
    z = radial_scores(region, samples)
    if np.any(z > 1.0 + 1e-9):
        raise DomainError("samples outside the HDR")
    stat = ks_statistic(z)
    return stat, float(special.kolmogorov(math.sqrt(z.size) * stat))
