"""Universal Kriging with an anisotropic Matern 5/2 kernel, and PC-Kriging."""
from __future__ import annotations

import numpy as np
from scipy import linalg, optimize

from .. import kernels
from ..exceptions import ConditioningError, TrainingError
from ..randvec import RandomVector, as_generator
from .basis import MultiIndexSet
from .pce import train_pce

NUGGETS = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
THETA_BOUNDS = (1e-2, 1e2)
SIGMA2_FLOOR = 1e-300
_PENALTY = 1e10


def constant_trend(d):
    return MultiIndexSet(np.zeros((1, d), dtype=np.intp), 0)


def _cholesky(R, nuggets=NUGGETS):
    """Cholesky factor of ``R + nugget I`` using the smallest nugget that works."""
    diag = np.diag_indices(R.shape[0])
    for nug in nuggets:
        Rn = R.copy()
        Rn[diag] += nug
        try:
            return linalg.cholesky(Rn, lower=True, overwrite_a=True, check_finite=False), nug
        except linalg.LinAlgError:
            continue
    raise ConditioningError("correlation matrix not positive definite after nugget escalation")


def _gls(L, F, y):
    """GLS trend coefficients, process variance and whitened quantities."""
    Ft = linalg.solve_triangular(L, F, lower=True)
    yt = linalg.solve_triangular(L, y, lower=True)
    beta, *_ = np.linalg.lstsq(Ft, yt, rcond=None)
    rt = yt - Ft @ beta
    sigma2 = max(float(rt @ rt) / y.size, SIGMA2_FLOOR)
    return beta, sigma2


def profile_nll(log_theta, z, y, F, nuggets=NUGGETS, return_grad=False):
    """Negative concentrated log-likelihood ``(n log s2 + log det R) / 2``.

    With ``return_grad`` also returns the derivative w.r.t. ``log theta``
    (the nugget is held fixed).
    """
    theta = np.exp(np.asarray(log_theta, dtype=float))
    n = y.size
    R = kernels.matern52_sym(z, theta)
    L, nug = _cholesky(R, nuggets)
    beta, sigma2 = _gls(L, F, y)
    val = 0.5 * (n * np.log(sigma2) + 2.0 * float(np.sum(np.log(np.diag(L)))))
    if not return_grad:
        return val
    Rinv = linalg.cho_solve((L, True), np.eye(n))
    gamma = Rinv @ (y - F @ beta)
    diff = z[:, None, :] - z[None, :, :]
    h2 = (diff / theta) ** 2
    s = np.sqrt(5.0 * h2.sum(axis=2))
    base = (5.0 / 3.0) * (1.0 + s) * np.exp(-s)
    grad = np.empty(theta.size)
    for k in range(theta.size):
        dR = base * h2[:, :, k]
        grad[k] = 0.5 * (float(np.sum(Rinv * dR)) - float(gamma @ dR @ gamma) / sigma2)
    return val, grad


class KrigingModel:
    """Trained universal Kriging model; inputs are mapped to standard-normal space."""

    kind = "kriging"

    def __init__(self, rv, trend_basis, theta, x_train, y_train, beta=None, sigma2=None, nugget=None):
        self.rv = rv
        self.trend_basis = trend_basis
        self.theta = np.array(theta, dtype=float)
        if np.any(self.theta <= 0):
            raise ValueError("length scales must be positive")
        self.x_train = np.array(x_train, dtype=float)
        self.y_train = np.array(y_train, dtype=float)
        self.z_train = rv.to_standard_normal(self.x_train)
        self.F = trend_basis.evaluate(self.z_train)
        R = kernels.matern52_sym(self.z_train, self.theta)
        ladder = NUGGETS if nugget is None else tuple(n for n in NUGGETS if n >= nugget) or (nugget,)
        self.chol, self.nugget = _cholesky(R, ladder)
        if beta is None or sigma2 is None:
            beta, sigma2 = _gls(self.chol, self.F, self.y_train)
        self.beta = np.array(beta, dtype=float)
        self.sigma2 = float(sigma2)
        self.gamma = linalg.cho_solve((self.chol, True), self.y_train - self.F @ self.beta)

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.rv.d:
            raise ValueError(f"expected {self.rv.d} columns, got {x.shape[1]}")
        out = self.predict_standard(self.rv.to_standard_normal(x))
        return out[0] if single else out

    def predict_standard(self, z, chunk=20_000):
        z = np.atleast_2d(z)
        out = np.empty(z.shape[0])
        for i in range(0, z.shape[0], chunk):
            zc = z[i : i + chunk]
            r = kernels.matern52(zc, self.z_train, self.theta)
            out[i : i + chunk] = self.trend_basis.evaluate(zc) @ self.beta + r @ self.gamma
        return out

    def loo_residuals(self):
        """Analytic leave-one-out residuals with theta held fixed."""
        n = self.y_train.size
        Rinv = linalg.cho_solve((self.chol, True), np.eye(n))
        RF = Rinv @ self.F
        Q = Rinv - RF @ np.linalg.solve(self.F.T @ RF, RF.T)
        return (Q @ self.y_train) / np.diag(Q)

    def to_dict(self):
        return {
            "kind": self.kind,
            "rv": self.rv.to_dict(),
            "trend_basis": self.trend_basis.indices.tolist(),
            "beta": self.beta.tolist(),
            "sigma2": self.sigma2,
            "theta": self.theta.tolist(),
            "nugget": self.nugget,
            "correlation": "matern52",
            "x_train": self.x_train.tolist(),
            "y_train": self.y_train.tolist(),
        }

    @classmethod
    def _kwargs(cls, data):
        idx = np.array(data["trend_basis"], dtype=np.intp)
        return dict(
            rv=RandomVector.from_dict(data["rv"]),
            trend_basis=MultiIndexSet(idx, int(idx.sum(axis=1).max())),
            theta=data["theta"],
            x_train=data["x_train"],
            y_train=data["y_train"],
            beta=data["beta"],
            sigma2=data["sigma2"],
            nugget=data["nugget"],
        )

    @classmethod
    def from_dict(cls, data):
        return cls(**cls._kwargs(data))


class PckModel(KrigingModel):
    """Kriging whose trend is the sparse basis selected by a PCE fit."""

    kind = "pck"

    def __init__(self, *args, pce=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.pce = pce


def kriging_loo(model, ed=None):
    """Relative LOO error ``mean(e_i^2) / var(y)`` from the Dubrule relations."""
    y = model.y_train if ed is None else ed.y
    e = model.loo_residuals()
    var_y = float(np.var(y))
    if var_y == 0.0:
        raise TrainingError("constant responses")
    return float(np.mean(e * e) / var_y)


def train_kriging(ed, trend_basis=None, seed=0, n_starts=10, model_cls=KrigingModel, **extra):
    """Fit theta by multi-start bounded Nelder-Mead on the profile likelihood."""
    n, d = ed.n, ed.rv.d
    if n < d + 2:
        raise ValueError("Kriging needs n >= d + 2")
    if trend_basis is None:
        trend_basis = constant_trend(d)
    z = ed.z
    y = np.asarray(ed.y, dtype=float)
    F = trend_basis.evaluate(z)
    span = np.ptp(z, axis=0)
    span[span <= 0] = 1.0
    lo = np.log(THETA_BOUNDS[0] * span)
    hi = np.log(THETA_BOUNDS[1] * span)
    rng = as_generator(seed)
    starts = lo + (hi - lo) * rng.random((n_starts, d))

    def obj(t):
        try:
            return profile_nll(t, z, y, F)
        except ConditioningError:
            return _PENALTY

    best_t, best_v = None, np.inf
    for t0 in starts:
        res = optimize.minimize(
            obj, t0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
            options={"xatol": 1e-3, "fatol": 1e-6, "maxiter": 100 * d},
        )
        if res.fun < best_v:
            best_t, best_v = res.x, float(res.fun)
    if best_v >= _PENALTY:
        raise ConditioningError("no length scale gave a positive-definite correlation matrix")
    return model_cls(ed.rv, trend_basis, np.exp(best_t), ed.x, y, **extra)


def train_pck(ed, nu_max=None, seed=0, n_starts=10):
    """PC-Kriging: hybrid-LAR PCE basis reused as the Kriging trend."""
    pce = train_pce(ed, nu_max=nu_max, seed=seed)
    return train_kriging(ed, pce.basis, seed=seed, n_starts=n_starts, model_cls=PckModel, pce=pce)
