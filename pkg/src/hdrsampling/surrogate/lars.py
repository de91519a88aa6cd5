"""Least angle regression and leave-one-out scoring along its path."""
from __future__ import annotations

import numpy as np
from scipy import linalg

LEVERAGE_TOL = 1e-12


def standardize(X):
    """Centre the columns of ``X`` and scale them to unit Euclidean norm.

    Returns the standardised matrix and a boolean mask of the columns kept
    (columns that are constant on the design are dropped).
    """
    Xc = X - X.mean(axis=0)
    norms = np.linalg.norm(Xc, axis=0)
    keep = norms > 1e-12 * max(1.0, float(np.max(norms, initial=0.0)))
    return Xc[:, keep] / norms[keep], keep


def lar_order(X, y, max_steps=None, tol=1e-12):
    """Order in which columns enter the LAR path (Efron et al. 2004).

    ``X`` must have centred, unit-norm columns and ``y`` must be centred.
    Columns that are numerically collinear with the active set are skipped.
    """
    n, p = X.shape
    if max_steps is None:
        max_steps = min(p, n - 1)
    max_steps = min(max_steps, p)
    active = []
    signs = []
    excluded = np.zeros(p, dtype=bool)
    in_active = np.zeros(p, dtype=bool)
    chol = np.zeros((0, 0))
    mu = np.zeros(n)
    c = X.T @ y
    c0 = float(np.max(np.abs(c))) if p else 0.0
    if c0 <= 0.0:
        return []

    def try_add(j, s):
        nonlocal chol
        k = len(active)
        if k:
            g = (X[:, active].T @ X[:, j]) * np.array(signs) * s
            l = linalg.solve_triangular(chol, g, lower=True)
            piv = 1.0 - float(l @ l)
        else:
            l = np.zeros(0)
            piv = float(X[:, j] @ X[:, j])
        if piv <= 1e-10:
            excluded[j] = True
            return False
        new = np.zeros((k + 1, k + 1))
        new[:k, :k] = chol
        new[k, :k] = l
        new[k, k] = np.sqrt(piv)
        chol = new
        active.append(j)
        signs.append(s)
        in_active[j] = True
        return True

    j = int(np.argmax(np.abs(c)))
    try_add(j, np.sign(c[j]))
    while len(active) < max_steps:
        c = X.T @ (y - mu)
        C = float(np.max(np.abs(c[active])))
        if C <= tol * c0:
            break
        s = np.array(signs)
        ones = np.ones(len(active))
        w1 = linalg.cho_solve((chol, True), ones)
        aa = 1.0 / np.sqrt(float(ones @ w1))
        u = X[:, active] @ (aa * w1 * s)
        a = X.T @ u
        free = ~(in_active | excluded)
        if not np.any(free):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = (C - c) / (aa - a)
            g2 = (C + c) / (aa + a)
        g1[~free | ~(g1 > 1e-15)] = np.inf
        g2[~free | ~(g2 > 1e-15)] = np.inf
        gam = np.minimum(g1, g2)
        added = False
        while not added:
            j = int(np.argmin(gam))
            if not np.isfinite(gam[j]):
                break
            step = gam[j]
            sign = 1.0 if g1[j] <= g2[j] else -1.0
            added = try_add(j, sign)
            if added:
                mu = mu + step * u
            else:
                gam[j] = np.inf
        if not added:
            break
    return active


def path_loo(Psi, y, order, max_terms=None):
    """Corrected relative LOO of the nested OLS models along ``order``.

    ``Psi[:, 0]`` must be the constant column; model ``k`` contains the
    constant and the first ``k`` entries of ``order``. Uses an incremental
    QR factorisation so the whole path costs ``O(n p^2)``.

    Returns ``(sizes, loo, columns)`` where ``columns[k]`` lists the
    columns kept by model ``k`` (collinear entries are skipped).
    """
    n = Psi.shape[0]
    if max_terms is None:
        max_terms = n - 1
    var_y = float(np.var(y))
    cols = [0] + [int(j) for j in order]
    m = min(len(cols), max_terms)
    Q = np.zeros((n, m))
    Rinv = np.zeros((m, m))
    rinv_sq = 0.0
    h = np.zeros(n)
    resid = np.array(y, dtype=float)
    kept = []
    sizes, loos, sets = [], [], []
    k = 0
    for col in cols:
        if k >= m:
            break
        a = Psi[:, col]
        Qk = Q[:, :k]
        r = Qk.T @ a
        w = a - Qk @ r
        r2 = Qk.T @ w
        w -= Qk @ r2
        r += r2
        rho = float(np.linalg.norm(w))
        if rho <= 1e-10 * max(1.0, float(np.linalg.norm(a))):
            continue
        q = w / rho
        Q[:, k] = q
        # R^-1 gains the column [-R^-1 r / rho, 1 / rho]
        Rinv[:k, k] = -(Rinv[:k, :k] @ r) / rho
        Rinv[k, k] = 1.0 / rho
        rinv_sq += float(Rinv[: k + 1, k] @ Rinv[: k + 1, k])
        h += q * q
        resid -= q * float(q @ y)
        k += 1
        kept.append(col)
        if k == 1:
            continue
        sizes.append(k)
        sets.append(list(kept))
        if np.max(h) >= 1.0 - LEVERAGE_TOL or k >= n:
            loos.append(np.inf)
            continue
        e = resid / (1.0 - h)
        corr = n / (n - k) * (1.0 + rinv_sq)
        loos.append(float(np.mean(e * e) / var_y * corr) if var_y > 0 else np.inf)
    return sizes, loos, sets
