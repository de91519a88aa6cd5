"""Failure-probability estimation by crude Monte Carlo and importance sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from ._normal import norm_ppf
from .exceptions import BudgetExhaustedError, DegenerateProposalError, UndefinedCovError
from .randvec import RandomVector, as_generator

MIN_ESS = 10.0


@dataclass(frozen=True)
class LimitState:
    """Limit-state function ``g``; failure is ``g(x) <= 0``.

    ``evaluator`` maps an ``(n, d)`` array of physical points to ``n`` values.
    """

    evaluator: object
    rv: RandomVector
    description: str = ""

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.evaluator(x), dtype=float).reshape(-1)

    def evaluate_standard(self, z):
        return self(self.rv.from_standard_normal(np.atleast_2d(z)))

    @classmethod
    def from_model(cls, model, rv, threshold=0.0, description=""):
        """``g(x) = model(x) - threshold`` for a callable or a surrogate with ``predict``."""
        fn = model.predict if hasattr(model, "predict") else model
        return cls(lambda x: np.asarray(fn(x), dtype=float) - threshold, rv, description)


@dataclass(frozen=True)
class ReliabilityEstimate:
    pf: float
    beta: float
    cov: float
    n_evals: int
    method: str

    @classmethod
    def from_pf(cls, pf, cov, n_evals, method):
        return cls(float(pf), float(-norm_ppf(pf)), float(cov), int(n_evals), method)

    def to_dict(self):
        return {"pf": self.pf, "beta": self.beta, "cov": self.cov,
                "n_evals": self.n_evals, "method": self.method}


def _check(cov_target, batch, max_n):
    if not cov_target > 0:
        raise ValueError("cov_target must be positive")
    if batch < 1 or max_n < batch:
        raise ValueError("need 1 <= batch <= max_n")


def binomial_cov(pf, n):
    if pf <= 0:
        return np.inf
    return float(np.sqrt((1.0 - pf) / (n * pf)))


def monte_carlo_pf(ls, cov_target=0.01, batch=100_000, max_n=100_000_000, seed=0):
    """Crude MC in batches until the binomial CoV reaches ``cov_target``."""
    _check(cov_target, batch, max_n)
    rng = as_generator(seed)
    d = ls.rv.d
    n = fails = 0
    while n < max_n:
        m = min(batch, max_n - n)
        z = norm_ppf(ls.rv.sample_unit(m, rng))
        fails += int(np.count_nonzero(ls.evaluate_standard(z) <= 0.0))
        n += m
        if fails and binomial_cov(fails / n, n) <= cov_target:
            return ReliabilityEstimate.from_pf(fails / n, binomial_cov(fails / n, n), n, "mc")
    if fails == 0:
        raise UndefinedCovError(f"no failures in {n} samples")
    est = ReliabilityEstimate.from_pf(fails / n, binomial_cov(fails / n, n), n, "mc")
    raise BudgetExhaustedError(f"CoV {est.cov:.3g} above target after {n} samples", est)


def importance_sampling_pf(ls, center=None, cov_target=0.01, batch=100_000,
                           max_n=100_000_000, seed=0):
    """IS with a unit-variance normal proposal shifted to ``center`` in standard space.

    With ``center`` at the origin the draws and the estimate coincide with
    :func:`monte_carlo_pf` for the same seed.
    """
    _check(cov_target, batch, max_n)
    d = ls.rv.d
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
    half_c2 = 0.5 * float(c @ c)
    rng = as_generator(seed)
    n = 0
    s1 = s2 = 0.0
    est = None
    while n < max_n:
        m = min(batch, max_n - n)
        z = norm_ppf(ls.rv.sample_unit(m, rng)) + c
        fail = ls.evaluate_standard(z) <= 0.0
        w = np.exp(half_c2 - z[fail] @ c)
        s1 += float(w.sum())
        s2 += float(w @ w)
        n += m
        if s1 == 0.0:
            continue
        pf = s1 / n
        var = max(s2 / n - pf * pf, 0.0)
        cov = float(np.sqrt(var / n) / pf)
        ess = s1 * s1 / s2
        est = ReliabilityEstimate.from_pf(pf, cov, n, "is")
        if cov <= cov_target and ess >= MIN_ESS:
            return est
    if est is None:
        raise UndefinedCovError(f"no failures in {n} samples")
    if s1 * s1 / s2 < MIN_ESS:
        raise DegenerateProposalError(f"effective sample size {s1 * s1 / s2:.2f} below {MIN_ESS:g}")
    raise BudgetExhaustedError(f"CoV {est.cov:.3g} above target after {n} samples", est)


def _bisect_radius(gz, z, iters=60):
    """Point on the segment [0, z] where ``g`` changes sign (``g(0) > 0 >= g(z)``)."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if gz(mid * z) <= 0.0:
            hi = mid
        else:
            lo = mid
    return hi * z


def find_proposal_center(ls, seed=0, n_explore=4000, scales=(1.0, 1.5, 2.0, 3.0, 4.0, 5.0),
                         n_starts=3, restarts=20):
    """Approximate most probable failure point in standard-normal space.

    Failing samples are searched with increasingly wide normal clouds; the
    closest ones start a penalised Nelder-Mead search for the minimum-norm
    failure point, which is finally projected radially onto ``g = 0``.
    Returns the origin when no failure is found.
    """
    d = ls.rv.d
    origin = np.zeros(d)
    g0 = float(ls.evaluate_standard(origin)[0])
    if not np.isfinite(g0) or g0 <= 0.0:
        return origin
    rng = as_generator(seed)
    found = []
    for s in scales:
        z = s * rng.standard_normal((n_explore, d))
        g = ls.evaluate_standard(z)
        found.append(z[g <= 0.0])
        if sum(len(f) for f in found) >= n_starts:
            break
    pts = np.vstack(found)
    if len(pts) == 0:
        return origin
    pts = pts[np.argsort(np.einsum("ij,ij->i", pts, pts), kind="stable")[:n_starts]]

    def gz(z):
        return float(ls.evaluate_standard(z)[0])

    best, best_r = None, np.inf
    for p in pts:
        start = _bisect_radius(gz, p)
        # exact-penalty weight: 10x the multiplier |z| / |grad g| at the start
        step = 1e-6 * max(1.0, float(np.linalg.norm(start)))
        grad = (ls.evaluate_standard(np.vstack([start + step * np.eye(d), start - step * np.eye(d)]))
                .reshape(2, d))
        gnorm = float(np.linalg.norm(grad[0] - grad[1])) / (2.0 * step)
        if not gnorm > 0.0:
            gnorm = abs(g0) / max(float(np.linalg.norm(start)), 1.0)
        weight = 10.0 * max(float(np.linalg.norm(start)), 1.0) / gnorm

        def obj(z):
            return 0.5 * float(z @ z) + weight * max(gz(z), 0.0)

        z, prev = start, np.inf
        # restarting rebuilds a collapsed simplex, which matters for d > 3
        for _ in range(restarts):
            res = optimize.minimize(obj, z, method="Nelder-Mead",
                                    options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 400 * d})
            z = res.x
            if prev - res.fun < 1e-9:
                break
            prev = res.fun
        if gz(z) > 0.0:
            # step just outside the boundary; pull back along the ray
            z = z * 1.001
            if gz(z) > 0.0:
                z = start
        z = _bisect_radius(gz, z)
        r = float(np.linalg.norm(z))
        if r < best_r:
            best, best_r = z, r
    return best
