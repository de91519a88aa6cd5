"""Reference numpy implementations of the numerical kernels."""
import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

_SQRT5 = np.sqrt(5.0)


def matern52(x1, x2, theta):
    """Anisotropic Matern 5/2 correlation between the rows of ``x1`` and ``x2``."""
    theta = np.asarray(theta, dtype=float)
    r = cdist(np.asarray(x1, dtype=float) / theta, np.asarray(x2, dtype=float) / theta)
    s = _SQRT5 * r
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


def matern52_sym(x, theta):
    """Correlation matrix of the rows of ``x`` with themselves."""
    theta = np.asarray(theta, dtype=float)
    s = _SQRT5 * squareform(pdist(np.asarray(x, dtype=float) / theta))
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


def hermite_table(z, maxdeg):
    """Normalised probabilists' Hermite values, shape ``(n, d, maxdeg + 1)``."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    n, d = z.shape
    out = np.empty((n, d, maxdeg + 1))
    out[:, :, 0] = 1.0
    if maxdeg >= 1:
        out[:, :, 1] = z
    for k in range(1, maxdeg):
        out[:, :, k + 1] = (z * out[:, :, k] - np.sqrt(k) * out[:, :, k - 1]) / np.sqrt(k + 1)
    return out


def psi_matrix(z, indices):
    """Orthonormal Hermite basis matrix, shape ``(n, len(indices))``."""
    indices = np.asarray(indices, dtype=np.intp)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    maxdeg = int(indices.max()) if indices.size else 0
    table = hermite_table(z, maxdeg)
    n, d = z.shape
    out = np.ones((n, len(indices)))
    cols = np.arange(d)
    step = max(1, 4_000_000 // max(1, len(indices) * d))
    for s in range(0, n, step):
        out[s:s + step] = np.prod(table[s:s + step][:, cols, indices], axis=-1)
    return out
