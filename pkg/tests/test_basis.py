import math

import numpy as np
import pytest

from hdrsampling.surrogate.basis import (
    MultiIndexSet,
    full_cardinality,
    orthonormal_eval,
    total_degree_indices,
)


def test_cardinality():
    assert len(total_degree_indices(2, 3)) == 10 == full_cardinality(2, 3)
    assert len(total_degree_indices(5, 3)) == math.comb(8, 3)


def test_indices_ordered_by_degree():
    idx = total_degree_indices(3, 4)
    assert np.all(np.diff(idx.sum(axis=1)) >= 0)
    assert tuple(idx[0]) == (0, 0, 0)


def test_hyperbolic_truncation_is_subset():
    full = {tuple(r) for r in total_degree_indices(4, 6)}
    hyp = {tuple(r) for r in total_degree_indices(4, 6, q=0.5)}
    assert hyp < full
    assert (6, 0, 0, 0) in hyp and (3, 3, 0, 0) not in hyp


def test_constant_and_linear_terms(rng):
    z = rng.standard_normal(10)
    np.testing.assert_array_equal(orthonormal_eval([0, 0], np.c_[z, z]), 1.0)
    np.testing.assert_allclose(orthonormal_eval([1], z.reshape(-1, 1)), z)


def test_orthonormality_by_monte_carlo():
    z = np.random.default_rng(0).standard_normal((1_000_000, 3))
    psi = MultiIndexSet.total_degree(3, 4).evaluate(z)
    gram = psi.T @ psi / len(z)
    # MC standard error of each entry of the Gram matrix
    sq = psi**2
    se = np.sqrt(sq.T @ sq / len(z) - gram**2) / 1000.0
    assert np.all(np.abs(gram - np.eye(psi.shape[1])) <= 3 * se + 1e-12)


def test_rejects_bad_indices():
    with pytest.raises(ValueError):
        MultiIndexSet(np.array([[0, 1], [0, 1]]), 1)
    with pytest.raises(ValueError):
        MultiIndexSet(np.array([[0, -1]]), 1)
