import json
import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrsampling.exceptions import DomainError, RegistryError
from hdrsampling.problems import (
    EMPTY_SLOTS,
    Problem,
    available_problems,
    bearing_factors,
    d_dimensional,
    d_dimensional_problem,
    franke,
    franke_problem,
    get_problem,
    load_plugin,
    register_problem,
    strip_foundation,
    strip_foundation_problem,
    unregister_problem,
)
from hdrsampling.randvec import gaussian
from hdrsampling.reliability import monte_carlo_pf

# 50-digit evaluation of the bearing-capacity ratio at the mean point
STRIP_MEAN_VALUE = 1.6690087109199311


@pytest.fixture
def registry():
    added = []
    yield added
    for name in added:
        unregister_problem(name)


def test_franke_at_first_peak():
    expect = (0.75 + 0.75 * math.exp(-9 / 49 - 3 / 10) + 0.5 * math.exp(-25 / 4 - 1 / 4)
              - 0.2 * math.exp(-4 - 25))
    assert franke([2 / 9, 2 / 9])[0] == pytest.approx(expect, rel=1e-14)


def test_franke_decays():
    assert abs(franke([[1e3, 1e3], [-1e3, -1e3]])).max() < 1e-12


def test_strip_mean_value():
    assert strip_foundation([26.9, 19.7, 21.0, 1400.0])[0] == pytest.approx(STRIP_MEAN_VALUE,
                                                                            rel=1e-13)


def test_strip_large_load_means_failure():
    assert strip_foundation([26.9, 19.7, 21.0, 1e12])[0] < 1e-6


def test_bearing_factors_need_positive_angle():
    with pytest.raises(DomainError):
        bearing_factors([0.0])
    with pytest.raises(DomainError):
        strip_foundation([-3.0, 19.7, 21.0, 1400.0])


def test_bearing_factors_increase_with_angle():
    nc, nq, ng = bearing_factors(np.array([10.0, 20.0, 30.0, 40.0]))
    for f in (nc, nq, ng):
        assert np.all(np.diff(f) > 0)


def test_d_dimensional_symmetric_case():
    assert d_dimensional([0.0], 1, 0.5)[0] == 0.0
    assert d_dimensional([-0.1], 1, 0.5)[0] < 0 < d_dimensional([0.1], 1, 0.5)[0]


def test_d_dimensional_problem_reference():
    p = d_dimensional_problem(5, 1e-4)
    assert p.name == "ddim:5:0.0001"
    assert p.pf_ref == 1e-4
    assert p.beta_ref == pytest.approx(3.719016485455709, rel=1e-12)
    assert get_problem("ddim:5:0.0001").d == 5


def test_d_dimensional_mc_symmetric():
    est = monte_carlo_pf(d_dimensional_problem(3, 0.5).limit_state, 0.01, seed=0)
    assert abs(est.pf - 0.5) < 3 * est.cov * est.pf


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 10), pf=st.floats(1e-6, 0.5), seed=st.integers(0, 1000))
def test_d_dimensional_bounded_and_monotone(d, pf, seed):
    x = np.random.default_rng(seed).standard_normal((20, d))
    g = d_dimensional(x, d, pf)
    assert np.all(np.abs(g) < 1)
    assert np.all(d_dimensional(x + 0.1, d, pf) >= g)


def test_builtin_problems():
    assert franke_problem().pf_ref == 5.74e-2
    assert franke_problem().beta_ref == 1.58
    s = strip_foundation_problem()
    assert (s.pf_ref, s.beta_ref, s.threshold) == (2.57e-4, 3.47, 1.0)
    assert {"franke", "strip_foundation"} <= set(available_problems())


def test_unknown_and_empty_slots():
    with pytest.raises(RegistryError):
        get_problem("nope")
    with pytest.raises(RegistryError):
        get_problem("short_column")
    with pytest.raises(RegistryError):
        get_problem("ddim:x:y")
    assert EMPTY_SLOTS["steel_column"]["pf_ref"] == 1.94e-5


def test_register_linear_toy(registry):
    rv = gaussian([0, 0], [1, 1])
    registry.append(register_problem(Problem("toy", rv, lambda x: 3.0 - x[:, 0])))
    est = monte_carlo_pf(get_problem("toy").limit_state, 0.05, seed=1)
    assert abs(est.beta - 3.0) < 0.05
    with pytest.raises(RegistryError):
        register_problem(Problem("toy", rv, lambda x: x[:, 0]))


def test_register_franke_alias_matches_builtin(registry):
    p = franke_problem()
    registry.append(register_problem(Problem("franke_copy", p.rv, p.model, p.threshold)))
    a = monte_carlo_pf(get_problem("franke_copy").limit_state, 0.05, seed=3)
    b = monte_carlo_pf(get_problem("franke").limit_state, 0.05, seed=3)
    assert a == b


def test_register_rejects_dimension_mismatch(registry):
    with pytest.raises(ValueError):
        register_problem(Problem("short_column", gaussian([0, 0], [1, 1]), lambda x: x[:, 0]))
    with pytest.raises(ValueError):
        register_problem(Problem("bad", gaussian([0, 0], [1, 1]), lambda x: franke(x[:, :1])))


def test_builtin_names_are_protected():
    with pytest.raises(RegistryError):
        register_problem(Problem("franke", gaussian([0, 0], [1, 1]), lambda x: x[:, 0]))


def test_external_plugin(tmp_path, registry):
    script = tmp_path / "model.py"
    script.write_text(
        "import sys\n"
        "for line in sys.stdin:\n"
        "    if line.strip():\n"
        "        x = [float(v) for v in line.split(',')]\n"
        "        print(2.5 - x[0])\n"
    )
    rv = gaussian([0, 0, 0], [1, 1, 1])
    doc = {"name": "short_column", "command": [sys.executable, str(script)],
           "rv": rv.to_dict(), "threshold": 0.0, "beta_ref": 2.5}
    path = tmp_path / "plugin.json"
    path.write_text(json.dumps(doc))
    problem = load_plugin(path)
    registry.append(problem.name)
    assert get_problem("short_column").ref_source == "plugin"
    y = problem.evaluate(np.array([[0.5, 0, 0], [3.0, 1, 1]]))
    np.testing.assert_allclose(y, [2.0, -0.5])
