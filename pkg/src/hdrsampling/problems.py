"""Benchmark problems and a name-based registry, including external plug-ins."""
from __future__ import annotations

import io
import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._normal import norm_cdf, norm_ppf
from .exceptions import DomainError, RegistryError
from .randvec import GaussianCopula, Marginal, RandomVector
from .reliability import LimitState

STRIP_WIDTH = 2.7
STRIP_DEPTH = 0.5


def _rows(x, d):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != d:
        raise ValueError(f"expected {d} columns, got {x.shape[1]}")
    return x


def franke(x):
    """Franke's four-exponential test function of two variables."""
    x = _rows(x, 2)
    a, b = 9.0 * x[:, 0], 9.0 * x[:, 1]
    return (
        0.75 * np.exp(-((a - 2) ** 2) / 4 - (b - 2) ** 2 / 4)
        + 0.75 * np.exp(-((a + 1) ** 2) / 49 - (b + 1) / 10)
        + 0.5 * np.exp(-((a - 7) ** 2) / 4 - (b - 3) ** 2 / 4)
        - 0.2 * np.exp(-((a - 4) ** 2) - (b - 7) ** 2)
    )


def bearing_factors(phi_deg):
    """``(N_c, N_q, N_gamma)`` for friction angles in degrees."""
    phi_deg = np.asarray(phi_deg, dtype=float)
    if np.any(~(phi_deg > 0.0)):
        raise DomainError("friction angle must be positive")
    phi = np.deg2rad(phi_deg)
    t = np.tan(phi)
    nq = np.exp(np.pi * t) * np.tan(np.pi / 4 + phi / 2) ** 2
    nc = (nq - 1.0) / t
    ng = 1.5 * (nq - 1.0) * t
    return nc, nq, ng


def strip_foundation(x, b=STRIP_WIDTH, h=STRIP_DEPTH):
    """Safety factor ``Q_p / F`` of a strip footing; ``x = (phi[deg], c, gamma, F)``."""
    x = _rows(x, 4)
    phi, c, gam, force = x.T
    nc, nq, ng = bearing_factors(phi)
    qp = b * (c * nc + h * gam * nq + 0.5 * b * gam * ng)
    return qp / force


def sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(t, dtype=float)))


def d_dimensional(x, d, pf):
    """``h(sum x) - h(sqrt(d) Phi^-1(pf))``; with standard normal inputs P[< 0] = pf."""
    if not 0.0 < pf < 1.0:
        raise ValueError("pf must lie in (0, 1)")
    x = _rows(x, d)
    return sigmoid(x.sum(axis=1)) - sigmoid(np.sqrt(d) * norm_ppf(pf))


def d_dimensional_pf(d, pf):
    """Exact failure probability of :func:`d_dimensional` (by construction ``pf``)."""
    thr = np.sqrt(d) * norm_ppf(pf)
    return float(norm_cdf(thr / np.sqrt(d)))


@dataclass(frozen=True, eq=False)
class Problem:
    """Model, input random vector and limit state ``g = model - threshold``."""

    name: str
    rv: RandomVector
    model: object
    threshold: float = 0.0
    beta_ref: float | None = None
    pf_ref: float | None = None
    ref_source: str = ""
    description: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.rv.d

    @property
    def limit_state(self):
        return LimitState.from_model(self.model, self.rv, self.threshold, self.name)

    def evaluate(self, x):
        return np.asarray(self.model(_rows(x, self.d)), dtype=float).reshape(-1)


def franke_problem():
    rv = RandomVector((Marginal.normal(0.5, 0.2), Marginal.normal(0.5, 0.2)))
    return Problem("franke", rv, franke, 0.1, 1.58, 5.74e-2, "table", "Franke function")


def strip_foundation_rv():
    margs = (
        Marginal.lognormal(26.9, 1.3),
        Marginal.lognormal(19.7, 4.9),
        Marginal.lognormal(21.0, 1.7),
        Marginal.gumbel(1400.0, 140.0),
    )
    corr = np.eye(4)
    corr[0, 1] = corr[1, 0] = -0.92
    return RandomVector(margs, GaussianCopula(corr))


def strip_foundation_problem():
    return Problem("strip_foundation", strip_foundation_rv(), strip_foundation, 1.0,
                   3.47, 2.57e-4, "table", "Strip foundation bearing capacity")


def d_dimensional_problem(d, pf):
    d = int(d)
    pf = float(pf)
    if d < 1:
        raise ValueError("d must be positive")
    rv = RandomVector(tuple(Marginal.normal(0.0, 1.0) for _ in range(d)))

    def model(x):
        return d_dimensional(x, d, pf)

    return Problem(f"ddim:{d}:{pf:g}", rv, model, 0.0, float(-norm_ppf(pf)), pf, "exact",
                   "Sigmoid of the coordinate sum")


# Table reference values for problems whose model formulas are not available;
# they can be filled with plug-ins under these names.
EMPTY_SLOTS = {
    "short_column": {"d": 3, "beta_ref": 2.51, "pf_ref": 5.97e-3},
    "bracket_structure": {"d": 5, "beta_ref": 2.00, "pf_ref": 2.29e-2},
    "infinite_slope": {"d": 6, "beta_ref": 1.58, "pf_ref": 5.76e-2},
    "steel_column": {"d": 9, "beta_ref": 4.11, "pf_ref": 1.94e-5},
    "truss_structure": {"d": 10, "beta_ref": 2.96, "pf_ref": 1.52e-3},
}

_BUILTIN = {"franke": franke_problem, "strip_foundation": strip_foundation_problem}
_REGISTRY: dict[str, Problem] = {}


def register_problem(problem, replace=False):
    """Make ``problem`` addressable by name; returns the name."""
    if not isinstance(problem, Problem):
        raise TypeError("expected a Problem")
    name = problem.name
    if not replace and (name in _REGISTRY or name in _BUILTIN or name.startswith("ddim:")):
        raise RegistryError(f"problem {name!r} is already registered")
    slot = EMPTY_SLOTS.get(name)
    if slot is not None and slot["d"] != problem.d:
        raise ValueError(f"slot {name!r} expects d={slot['d']}, got {problem.d}")
    probe = problem.rv.mean.reshape(1, -1)
    try:
        out = problem.evaluate(probe)
    except ValueError as exc:
        raise ValueError(f"model rejects {problem.d}-dimensional input: {exc}") from exc
    if out.shape != (1,):
        raise ValueError("model must return one value per input row")
    _REGISTRY[name] = problem
    return name


def unregister_problem(name):
    _REGISTRY.pop(name, None)


def available_problems():
    return sorted(set(_BUILTIN) | set(_REGISTRY)) + ["ddim:<d>:<pf>"]


def get_problem(name):
    if name in _REGISTRY:
        return _REGISTRY[name]
    if name in _BUILTIN:
        return _BUILTIN[name]()
    if name.startswith("ddim:"):
        try:
            _, d, pf = name.split(":")
            return d_dimensional_problem(int(d), float(pf))
        except ValueError as exc:
            raise RegistryError(f"malformed problem name {name!r}: {exc}") from None
    if name in EMPTY_SLOTS:
        raise RegistryError(f"problem {name!r} has no model; register a plug-in under this name")
    raise RegistryError(f"unknown problem {name!r}")


class ExternalModel:
    """Evaluate a model through an external command.

    The command reads CSV rows of inputs on stdin and writes one response
    per line on stdout.
    """

    def __init__(self, command, d, timeout=None, cwd=None):
        self.command = list(command)
        self.d = int(d)
        self.timeout = timeout
        self.cwd = cwd

    def __call__(self, x):
        x = _rows(x, self.d)
        buf = io.StringIO()
        np.savetxt(buf, x, delimiter=",", fmt="%.17g")
        proc = subprocess.run(self.command, input=buf.getvalue(), capture_output=True, text=True,
                              timeout=self.timeout, cwd=self.cwd, check=False)
        if proc.returncode != 0:
            raise RuntimeError(f"external model failed ({proc.returncode}): {proc.stderr.strip()}")
        y = np.array([float(v) for v in proc.stdout.split()], dtype=float)
        if y.size != x.shape[0]:
            raise RuntimeError(f"external model returned {y.size} values for {x.shape[0]} rows")
        return y


def load_plugin(source, register=True):
    """Build a problem from a JSON plug-in description.

    Keys: ``name``, ``command`` (list), ``rv`` (random-vector document),
    optional ``threshold``, ``beta_ref``, ``pf_ref``, ``description``.
    Relative paths in ``command`` are taken relative to the JSON file.
    """
    base = None
    if isinstance(source, dict):
        spec = source
    else:
        path = Path(source)
        spec = json.loads(path.read_text())
        base = path.parent
    rv = RandomVector.from_dict(spec["rv"])
    model = ExternalModel(spec["command"], rv.d, spec.get("timeout"), base)
    problem = Problem(spec["name"], rv, model, float(spec.get("threshold", 0.0)),
                      spec.get("beta_ref"), spec.get("pf_ref"), "plugin",
                      spec.get("description", ""))
    if register:
        register_problem(problem, replace=bool(spec.get("replace", False)))
    return problem
