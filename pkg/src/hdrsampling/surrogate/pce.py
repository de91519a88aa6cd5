"""Degree-adaptive sparse polynomial chaos expansions (hybrid LAR)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ..exceptions import LeverageDegenerateError, TrainingError
from ..randvec import RandomVector
from .basis import MultiIndexSet, full_cardinality
from .lars import LEVERAGE_TOL, lar_order, path_loo, standardize

SAMPLER_NATURAL = "natural"


def hdr_tag(alpha):
    return f"hdr({alpha:g})"


@dataclass(frozen=True, eq=False)
class ExperimentalDesign:
    x: np.ndarray
    y: np.ndarray
    rv: RandomVector
    sampler_tag: str = SAMPLER_NATURAL

    def __post_init__(self):
        x = np.atleast_2d(np.array(self.x, dtype=float))
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape[1] != self.rv.d:
            raise ValueError(f"design has {x.shape[1]} columns, random vector has {self.rv.d}")
        if x.shape[0] != y.size:
            raise ValueError("x and y lengths differ")
        if x.shape[0] < self.rv.d + 1:
            raise ValueError("experimental design needs n >= d + 1")
        if not np.all(np.isfinite(y)):
            raise ValueError("responses must be finite")
        if cKDTree(x).query_pairs(1e-12):
            raise ValueError("experimental design contains duplicate rows")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def z(self):
        return self.rv.to_standard_normal(self.x)


@dataclass(frozen=True, eq=False)
class PceModel:
    """Sparse PCE in independent standard-normal space.

    ``coefficients[k]`` multiplies the basis function ``basis.indices[k]``;
    the first index is always the constant term.
    """

    basis: MultiIndexSet
    coefficients: np.ndarray
    loo: float
    rv: RandomVector
    degree: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float)
        if coef.size != len(self.basis):
            raise ValueError("one coefficient per basis function is required")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    kind = "pce"

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if x.shape[1] != self.rv.d:
            raise ValueError(f"expected {self.rv.d} columns, got {x.shape[1]}")
        out = self.predict_standard(self.rv.to_standard_normal(x))
        return out[0] if single else out

    def predict_standard(self, z):
        return self.basis.evaluate(z) @ self.coefficients

    @property
    def mean(self):
        const = np.flatnonzero(self.basis.indices.sum(axis=1) == 0)
        return float(self.coefficients[const[0]]) if const.size else 0.0

    @property
    def variance(self):
        nonconst = self.basis.indices.sum(axis=1) > 0
        return float(np.sum(self.coefficients[nonconst] ** 2))

    def to_dict(self):
        return {
            "kind": "pce",
            "rv": self.rv.to_dict(),
            "degree": self.degree,
            "basis": self.basis.indices.tolist(),
            "coefficients": self.coefficients.tolist(),
            "loo": self.loo,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data):
        idx = np.array(data["basis"], dtype=np.intp)
        return cls(
            MultiIndexSet(idx, int(idx.sum(axis=1).max())),
            data["coefficients"],
            float(data["loo"]),
            RandomVector.from_dict(data["rv"]),
            int(data.get("degree", 0)),
            dict(data.get("meta", {})),
        )


def ols_loo_residuals(Psi, y):
    """OLS fit with analytic leave-one-out residuals.

    Returns ``(coefficients, loo_residuals, leverage, trace_inv)`` where
    ``trace_inv = tr((Psi^T Psi)^-1)``.
    """
    Q, R = np.linalg.qr(Psi)
    if np.any(np.abs(np.diag(R)) <= 1e-12 * max(1.0, float(np.max(np.abs(np.diag(R)))))):
        raise TrainingError("rank-deficient regression matrix")
    qty = Q.T @ y
    coef = np.linalg.solve(R, qty)
    h = np.sum(Q * Q, axis=1)
    if np.max(h) >= 1.0 - LEVERAGE_TOL:
        raise LeverageDegenerateError("hat-matrix diagonal numerically equal to one")
    resid = y - Q @ qty
    Rinv = np.linalg.solve(R, np.eye(R.shape[0]))
    return coef, resid / (1.0 - h), h, float(np.sum(Rinv * Rinv))


def relative_loo(Psi, y, corrected=True):
    """Relative LOO error of the OLS fit on ``Psi`` (corrected by default)."""
    n, p = Psi.shape
    _, e, _, tr = ols_loo_residuals(Psi, y)
    var_y = float(np.var(y))
    if var_y == 0.0:
        raise TrainingError("constant responses")
    err = float(np.mean(e * e) / var_y)
    if corrected:
        err *= n / (n - p) * (1.0 + tr)
    return err


def pce_loo(model, ed, corrected=True):
    """Analytic relative LOO error of a PCE trained on ``ed``."""
    Psi = model.basis.evaluate(ed.z)
    return relative_loo(Psi, ed.y, corrected)


def default_max_degree(d, n, cap=12):
    """Largest degree whose full basis stays below ``3 n`` terms (at most ``cap``)."""
    nu = 1
    while nu < cap and full_cardinality(d, nu + 1) < 3 * n:
        nu += 1
    return nu


def train_pce(ed, nu_max=None, seed=None, q=1.0, early_stop=2, max_candidates=5000):
    """Degree-adaptive hybrid LAR.

    For each degree the LAR path selects basis functions on the
    standardised regression matrix; every path model is refitted by OLS and
    scored with the corrected LOO error, and the global best model is kept.
    The degree loop stops after ``early_stop`` consecutive degrees without
    improvement. ``seed`` is accepted for interface symmetry; the procedure
    is deterministic.
    """
    y = ed.y
    n, d = ed.n, ed.rv.d
    if n < 3:
        raise ValueError("need at least 3 training points")
    if nu_max is None:
        nu_max = default_max_degree(d, n)
    if nu_max < 1:
        raise ValueError("nu_max must be at least 1")
    if np.ptp(y) == 0.0:
        raise TrainingError("responses are constant")
    z = ed.z
    yc = y - y.mean()
    best = None
    stall = 0
    for nu in range(1, nu_max + 1):
        qq = q
        if qq >= 1.0 and full_cardinality(d, nu) > max_candidates:
            qq = 0.75
        basis = MultiIndexSet.total_degree(d, nu, qq)
        Psi = basis.evaluate(z)
        Xs, keep = standardize(Psi[:, 1:])
        cand = np.flatnonzero(keep) + 1
        order = lar_order(Xs, yc, max_steps=min(Xs.shape[1], n - 2))
        sizes, loos, sets = path_loo(Psi, y, cand[order], max_terms=n - 1)
        if not loos or not np.isfinite(np.min(loos)):
            stall += 1
            if stall >= early_stop and best is not None:
                break
            continue
        k = int(np.argmin(loos))
        cand_best = (loos[k], nu, basis.subset(sets[k]))
        if best is None or cand_best[0] < best[0]:
            best = cand_best
            stall = 0
        else:
            stall += 1
            if stall >= early_stop:
                break
    if best is None:
        raise TrainingError("regression is rank deficient for every candidate degree")
    loo, nu, sel = best
    coef, _, _, _ = ols_loo_residuals(sel.evaluate(z), y)
    return PceModel(sel, coef, loo, ed.rv, nu, {"n": n, "sampler": ed.sampler_tag})
