"""Random vectors made of parametric marginals coupled by a Gaussian copula.

Three spaces are involved:

* unit space ``u`` in ``(0, 1)^d``,
* independent standard-normal space ``z`` (``z_i = Phi^-1(u_i)``),
* physical space ``x`` with ``x_i = F_i^-1(Phi((L z)_i))`` where ``L`` is the
  Cholesky factor of the copula correlation matrix.

All transforms act row-wise on ``(n, d)`` arrays; single points of shape
``(d,)`` are accepted and returned with the same shape.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, special

from ._normal import norm_cdf, norm_logpdf, norm_ppf
from .exceptions import DomainError

EULER_GAMMA = 0.5772156649015329
FAMILIES = ("normal", "lognormal", "gumbel", "uniform")
_UNIT_CLIP = 1e-15


def as_generator(seed):
    """Return a numpy Generator for an int seed, SeedSequence or Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class Marginal:
    """One-dimensional marginal distribution.

    Normal, lognormal and Gumbel (maximum) marginals are parametrised by the
    mean ``mu`` and standard deviation ``sigma`` of the physical variable;
    uniform marginals by ``lower`` and ``upper``.
    """

    family: str
    mu: float | None = None
    sigma: float | None = None
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        family = str(self.family).lower()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"unknown marginal family {self.family!r}")
        if family == "uniform":
            if self.lower is None or self.upper is None:
                raise ValueError("uniform marginal needs lower and upper")
            if not self.upper > self.lower:
                raise ValueError("uniform marginal needs upper > lower")
            return
        if self.mu is None or self.sigma is None:
            raise ValueError(f"{family} marginal needs mu and sigma")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if family == "lognormal" and not self.mu > 0:
            raise ValueError("lognormal marginal needs mu > 0")

    @classmethod
    def normal(cls, mu, sigma):
        return cls("normal", mu=float(mu), sigma=float(sigma))

    @classmethod
    def lognormal(cls, mu, sigma):
        return cls("lognormal", mu=float(mu), sigma=float(sigma))

    @classmethod
    def gumbel(cls, mu, sigma):
        return cls("gumbel", mu=float(mu), sigma=float(sigma))

    @classmethod
    def uniform(cls, lower, upper):
        return cls("uniform", lower=float(lower), upper=float(upper))

    # -- parameters -------------------------------------------------------
    @property
    def lognormal_params(self):
        """Log-space mean and standard deviation ``(lambda, zeta)``."""
        zeta2 = math.log1p((self.sigma / self.mu) ** 2)
        return math.log(self.mu) - 0.5 * zeta2, math.sqrt(zeta2)

    @property
    def gumbel_params(self):
        """Location and scale of the Gumbel (maximum) distribution."""
        scale = self.sigma * math.sqrt(6.0) / math.pi
        return self.mu - EULER_GAMMA * scale, scale

    @property
    def mean(self):
        if self.family == "uniform":
            return 0.5 * (self.lower + self.upper)
        return self.mu

    @property
    def std(self):
        if self.family == "uniform":
            return (self.upper - self.lower) / math.sqrt(12.0)
        return self.sigma

    @property
    def support(self):
        if self.family == "uniform":
            return self.lower, self.upper
        if self.family == "lognormal":
            return 0.0, math.inf
        return -math.inf, math.inf

    # -- densities and distribution functions ------------------------------
    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam == "normal":
            return norm_logpdf((x - self.mu) / self.sigma) - math.log(self.sigma)
        if fam == "lognormal":
            lam, zeta = self.lognormal_params
            out = np.full(x.shape, -np.inf)
            pos = x > 0
            lx = np.log(x[pos])
            out[pos] = norm_logpdf((lx - lam) / zeta) - math.log(zeta) - lx
            return out
        if fam == "gumbel":
            loc, scale = self.gumbel_params
            t = (x - loc) / scale
            return -t - np.exp(-t) - math.log(scale)
        inside = (x >= self.lower) & (x <= self.upper)
        return np.where(inside, -math.log(self.upper - self.lower), -np.inf)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam == "normal":
            return norm_cdf((x - self.mu) / self.sigma)
        if fam == "lognormal":
            return norm_cdf(self.to_normal(x))
        if fam == "gumbel":
            loc, scale = self.gumbel_params
            return np.exp(-np.exp(-(x - loc) / scale))
        return np.clip((x - self.lower) / (self.upper - self.lower), 0.0, 1.0)

    def ppf(self, u):
        """Inverse cdf on ``[0, 1]`` (boundaries map to the support ends)."""
        return self.from_normal(norm_ppf(np.asarray(u, dtype=float)))

    def to_normal(self, x):
        """``Phi^-1(F(x))`` evaluated without a round trip through ``F``."""
        x = np.asarray(x, dtype=float)
        fam = self.family
        if fam == "normal":
            return (x - self.mu) / self.sigma
        if fam == "lognormal":
            lam, zeta = self.lognormal_params
            with np.errstate(divide="ignore", invalid="ignore"):
                z = (np.log(x) - lam) / zeta
            return np.where(x > 0, z, -np.inf)
        if fam == "gumbel":
            loc, scale = self.gumbel_params
            # log F = -exp(-t); ndtri_exp keeps both tails accurate
            return special.ndtri_exp(-np.exp(-(x - loc) / scale))
        return norm_ppf(self.cdf(x))

    def from_normal(self, z):
        """``F^-1(Phi(z))``."""
        z = np.asarray(z, dtype=float)
        fam = self.family
        if fam == "normal":
            return self.mu + self.sigma * z
        if fam == "lognormal":
            lam, zeta = self.lognormal_params
            return np.exp(lam + zeta * z)
        if fam == "gumbel":
            loc, scale = self.gumbel_params
            with np.errstate(divide="ignore"):
                return loc - scale * np.log(-special.log_ndtr(z))
        return self.lower + (self.upper - self.lower) * norm_cdf(z)

    def to_dict(self):
        if self.family == "uniform":
            return {"family": "uniform", "lower": self.lower, "upper": self.upper}
        return {"family": self.family, "mu": self.mu, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        family = data.pop("family")
        return cls(family, **{k: float(v) for k, v in data.items()})


class GaussianCopula:
    """Gaussian copula with latent correlation matrix ``sigma_matrix``."""

    def __init__(self, sigma_matrix):
        s = np.array(sigma_matrix, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(s), 1.0, rtol=0, atol=1e-12):
            raise ValueError("correlation matrix must have a unit diagonal")
        off = s[~np.eye(len(s), dtype=bool)]
        if np.any(np.abs(off) >= 1.0):
            raise ValueError("off-diagonal correlations must lie in (-1, 1)")
        s = 0.5 * (s + s.T)
        try:
            chol = np.linalg.cholesky(s)
        except np.linalg.LinAlgError as exc:
            raise ValueError("correlation matrix is not positive definite") from exc
        self._sigma = s
        self._chol = chol
        self.logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
        self.is_identity = bool(np.array_equal(s, np.eye(len(s))))
        for a in (self._sigma, self._chol):
            a.setflags(write=False)

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @property
    def dim(self):
        return self._sigma.shape[0]

    @property
    def sigma_matrix(self):
        return self._sigma

    @property
    def cholesky(self):
        return self._chol

    def correlate(self, z):
        """Map independent normals to latent correlated normals (``L z``)."""
        return z if self.is_identity else z @ self._chol.T

    def decorrelate(self, zc):
        """Inverse of :meth:`correlate`."""
        if self.is_identity:
            return zc
        return linalg.solve_triangular(self._chol, zc.T, lower=True).T

    def log_density_normal(self, zc):
        """Log copula density given latent normal scores ``zc`` (rows)."""
        if self.is_identity:
            return np.zeros(zc.shape[0])
        w = self.decorrelate(zc)
        return -0.5 * self.logdet - 0.5 * (np.sum(w * w, axis=1) - np.sum(zc * zc, axis=1))

    def density(self, u):
        """Copula density ``c(u)`` for rows of ``u`` in ``(0, 1)^d``."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        return np.exp(self.log_density_normal(norm_ppf(u)))

    def __eq__(self, other):
        return isinstance(other, GaussianCopula) and np.array_equal(self._sigma, other._sigma)

    def __hash__(self):
        return hash(self._sigma.tobytes())

    def __repr__(self):
        return f"GaussianCopula({self._sigma.tolist()!r})"


@dataclass(frozen=True)
class RandomVector:
    """Marginals coupled by a Gaussian copula (identity when independent)."""

    marginals: tuple
    copula: GaussianCopula = field(default=None)

    def __post_init__(self):
        margs = tuple(self.marginals)
        if not margs:
            raise ValueError("a random vector needs at least one marginal")
        object.__setattr__(self, "marginals", margs)
        cop = self.copula
        if cop is None:
            cop = GaussianCopula.identity(len(margs))
        elif not isinstance(cop, GaussianCopula):
            cop = GaussianCopula(cop)
        if cop.dim != len(margs):
            raise ValueError(
                f"copula dimension {cop.dim} does not match {len(margs)} marginals"
            )
        object.__setattr__(self, "copula", cop)

    @property
    def d(self):
        return len(self.marginals)

    @property
    def mean(self):
        return np.array([m.mean for m in self.marginals])

    @property
    def std(self):
        return np.array([m.std for m in self.marginals])

    @property
    def is_gaussian(self):
        return all(m.family == "normal" for m in self.marginals)

    @property
    def has_constant_density(self):
        return self.copula.is_identity and all(m.family == "uniform" for m in self.marginals)

    @property
    def support(self):
        """``(lower, upper)`` arrays of the marginal supports."""
        lo, hi = zip(*(m.support for m in self.marginals))
        return np.array(lo), np.array(hi)

    def gaussian_covariance(self):
        """Exact covariance ``A Sigma A`` for an all-normal random vector."""
        if not self.is_gaussian:
            raise DomainError("closed-form covariance requires normal marginals")
        a = self.std
        return self.copula.sigma_matrix * np.outer(a, a)

    # -- transforms -------------------------------------------------------
    def _rows(self, arr):
        arr = np.asarray(arr, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.d:
            raise ValueError(f"expected {self.d} columns, got {arr.shape[1]}")
        return arr, single

    def _latent_to_physical(self, zc):
        x = np.empty_like(zc)
        for j, m in enumerate(self.marginals):
            x[:, j] = m.from_normal(zc[:, j])
        return x

    def _physical_to_latent(self, x):
        zc = np.empty_like(x)
        for j, m in enumerate(self.marginals):
            zc[:, j] = m.to_normal(x[:, j])
        return zc

    def from_standard_normal(self, z):
        z, single = self._rows(z)
        x = self._latent_to_physical(self.copula.correlate(z))
        return x[0] if single else x

    def to_standard_normal(self, x):
        x, single = self._rows(x)
        z = self.copula.decorrelate(self._physical_to_latent(x))
        return z[0] if single else z

    def from_unit(self, u):
        """Isoprobabilistic map from ``(0, 1)^d`` to physical space."""
        u, single = self._rows(u)
        if np.any(~(u > 0.0) | ~(u < 1.0)):
            raise DomainError("unit-space points must lie strictly inside (0, 1)^d")
        x = self._latent_to_physical(self.copula.correlate(norm_ppf(u)))
        return x[0] if single else x

    def to_unit(self, x):
        z = self.to_standard_normal(x)
        return norm_cdf(z)

    # -- density ----------------------------------------------------------
    def logpdf(self, x):
        x, single = self._rows(x)
        if not np.all(np.isfinite(x)):
            raise DomainError("density evaluated at a non-finite point")
        out = np.zeros(x.shape[0])
        for j, m in enumerate(self.marginals):
            out += m.logpdf(x[:, j])
        if not self.copula.is_identity:
            ok = np.isfinite(out)
            if np.any(ok):
                zc = self._physical_to_latent(x[ok])
                out[ok] += self.copula.log_density_normal(zc)
        return out[0] if single else out

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    # -- sampling ---------------------------------------------------------
    def sample_unit(self, n, seed):
        """``n`` i.i.d. uniforms, clipped away from the cube boundary."""
        if int(n) < 1:
            raise ValueError("n must be at least 1")
        rng = as_generator(seed)
        u = rng.random((int(n), self.d))
        return np.clip(u, _UNIT_CLIP, 1.0 - _UNIT_CLIP)

    def sample(self, n, seed):
        return self.from_unit(self.sample_unit(n, seed))

    def covariance_estimate(self, n=200_000, seed=0):
        """Covariance matrix of the random vector.

        Exact for all-normal marginals, otherwise the sample covariance of
        ``n`` draws.
        """
        if self.is_gaussian:
            return self.gaussian_covariance()
        if n < 10 * self.d:
            raise ValueError("covariance estimate needs n >= 10 d")
        return np.cov(self.sample(n, seed), rowvar=False).reshape(self.d, self.d)

    # -- serialisation ----------------------------------------------------
    def to_dict(self):
        return {
            "marginals": [m.to_dict() for m in self.marginals],
            "correlation": self.copula.sigma_matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        margs = tuple(Marginal.from_dict(m) for m in data["marginals"])
        corr = data.get("correlation")
        return cls(margs, None if corr is None else GaussianCopula(corr))

    def to_json(self, path=None, **kw):
        text = json.dumps(self.to_dict(), **kw)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, path_or_text):
        text = str(path_or_text)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def independent(marginals):
    return RandomVector(tuple(marginals))


def gaussian(mean, std, correlation=None):
    """All-normal random vector from means, standard deviations and correlation."""
    margs = tuple(Marginal.normal(m, s) for m, s in zip(mean, std))
    return RandomVector(margs, None if correlation is None else GaussianCopula(correlation))


# Operation-style aliases -------------------------------------------------

def joint_pdf(rv, x):
    return rv.pdf(x)


def sample(rv, n, seed):
    return rv.sample(n, seed)


def from_unit(rv, u):
    return rv.from_unit(u)


def to_standard_normal(rv, x):
    return rv.to_standard_normal(x)


def covariance_estimate(rv, n=200_000, seed=0):
    return rv.covariance_estimate(n, seed)
