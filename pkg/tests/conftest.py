import numpy as np
import pytest

from hdrsampling.randvec import gaussian


def random_correlation(d, rng):
    """Symmetric matrix with U(0, 1) off-diagonal entries, clipped to be SPD."""
    a = rng.uniform(0.0, 1.0, (d, d))
    s = np.triu(a, 1)
    s = s + s.T + np.eye(d)
    w, v = np.linalg.eigh(s)
    s = (v * np.maximum(w, 1e-3)) @ v.T
    dg = np.sqrt(np.diag(s))
    s = s / np.outer(dg, dg)
    np.fill_diagonal(s, 1.0)
    return s


def random_gaussian_rv(d, rng):
    """Zero-mean Gaussian vector with sigma_i ~ U(0, 20) and a random correlation."""
    std = rng.uniform(0.0, 20.0, d)
    std = np.maximum(std, 1e-3)
    return gaussian(np.zeros(d), std, random_correlation(d, rng))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance.py::test_criterion_" not in rep.nodeid:
                continue
            num = int(rep.nodeid.split("test_criterion_")[1].split("_")[0])
            detail = dict(rep.user_properties).get("detail", "")
            lines.append((num, f"criterion {num:2d}: {outcome.upper():6s} {detail}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
