"""Multi-index sets and the orthonormal Hermite basis."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels


def _compositions(d, total):
    """All d-tuples of non-negative ints summing to ``total``, lexicographically descending."""
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(d - 1, total - first):
            yield (first,) + rest


def total_degree_indices(d, degree, q=1.0):
    """Multi-indices of total degree ``<= degree`` ordered by degree.

    ``q < 1`` applies hyperbolic truncation ``(sum i_k^q)^(1/q) <= degree``.
    """
    if d < 1 or degree < 0:
        raise ValueError("need d >= 1 and degree >= 0")
    out = []
    for deg in range(degree + 1):
        for idx in _compositions(d, deg):
            if q < 1.0 and deg > 0:
                if sum(i**q for i in idx) ** (1.0 / q) > degree + 1e-10:
                    continue
            out.append(idx)
    return np.array(out, dtype=np.intp).reshape(-1, d)


@dataclass(frozen=True, eq=False)
class MultiIndexSet:
    indices: np.ndarray
    degree: int

    def __post_init__(self):
        idx = np.array(self.indices, dtype=np.intp)
        if idx.ndim != 2:
            raise ValueError("indices must be a 2-d array")
        if np.any(idx < 0):
            raise ValueError("multi-indices must be non-negative")
        if len({tuple(r) for r in idx}) != len(idx):
            raise ValueError("duplicate multi-indices")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def total_degree(cls, d, degree, q=1.0):
        return cls(total_degree_indices(d, degree, q), degree)

    @property
    def d(self):
        return self.indices.shape[1]

    def __len__(self):
        return self.indices.shape[0]

    def subset(self, rows):
        idx = self.indices[np.asarray(rows, dtype=np.intp)]
        deg = int(idx.sum(axis=1).max()) if len(idx) else 0
        return MultiIndexSet(idx, deg)

    def evaluate(self, z):
        """Basis matrix ``Psi`` with one column per multi-index."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] != self.d:
            raise ValueError(f"expected {self.d} columns, got {z.shape[1]}")
        return kernels.psi_matrix(z, self.indices)


def full_cardinality(d, degree):
    return math.comb(d + degree, degree)


def orthonormal_eval(index, z):
    """Product of normalised Hermite polynomials ``He_k(z_i) / sqrt(k!)``."""
    index = np.asarray(index, dtype=np.intp).reshape(1, -1)
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = z.reshape(1)
    single = z.ndim == 1
    val = kernels.psi_matrix(np.atleast_2d(z), index)[:, 0]
    return float(val[0]) if single else val
