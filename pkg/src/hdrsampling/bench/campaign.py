"""Replicated benchmark campaigns comparing natural and HDR experimental designs.

Records are appended to ``records.csv`` in a fixed canonical order, so a
campaign interrupted at any point and resumed produces the same bytes as an
uninterrupted run. Wall-clock times are kept in ``timings.csv`` because they
are not reproducible.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .. import __version__
from ..exceptions import HdrsError
from ..hdr import build_region, gaussian_region, sample_hdr
from ..problems import get_problem
from ..reliability import LimitState, find_proposal_center, importance_sampling_pf, monte_carlo_pf
from ..surrogate import ExperimentalDesign, kriging_loo, train_pce, train_pck
from ..surrogate.pce import SAMPLER_NATURAL, hdr_tag
from .metrics import noise_tolerance, relative_mse, rrie

RECORDS = "records.csv"
TIMINGS = "timings.csv"
SIDECAR = "records.meta.json"
REFERENCES = "references.json"

COLUMNS = (
    "problem", "n", "sampler", "surrogate", "rep", "status", "rloo", "rmse", "rrie",
    "beta_hat", "beta_ref", "rrie_tol", "disqualified", "basis_size", "validation_hash",
)
_FLOATS = ("rloo", "rmse", "rrie", "beta_hat", "beta_ref", "rrie_tol")


@dataclass
class CampaignConfig:
    problems: list = field(default_factory=lambda: ["franke"])
    sizes: list = field(default_factory=lambda: [50, 100, 150, 200, 250])
    alphas: list = field(default_factory=lambda: [0.01])
    surrogates: list = field(default_factory=lambda: ["pce", "pck"])
    include_natural: bool = True
    replications: int = 20
    validation_size: int = 100_000
    cov_target: float = 0.01
    reference_cov: float = 0.002
    level_cov: float = 0.01
    gamma: float = 0.01
    is_batch: int = 20_000
    is_max_n: int = 100_000_000
    nu_max: int | None = None
    kriging_starts: int = 10
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        self.problems = [str(p) for p in self.problems]
        self.sizes = [int(n) for n in self.sizes]
        self.alphas = [float(a) for a in self.alphas]
        self.surrogates = [str(s) for s in self.surrogates]
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        bad = set(self.surrogates) - {"pce", "pck"}
        if bad:
            raise ValueError(f"unknown surrogate kinds {sorted(bad)}")
        if not self.sizes or not self.problems or not self.surrogates:
            raise ValueError("problems, sizes and surrogates must be non-empty")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("alpha levels must lie in (0, 1)")
        if not self.samplers:
            raise ValueError("no sampler selected")

    @property
    def samplers(self):
        tags = [SAMPLER_NATURAL] if self.include_natural else []
        return tags + [hdr_tag(a) for a in self.alphas]

    def validate_problems(self):
        for name in self.problems:
            d = get_problem(name).d
            small = [n for n in self.sizes if n < d + 2]
            if small:
                raise ValueError(f"sizes {small} are below d + 2 = {d + 2} for {name}")

    def to_dict(self):
        return asdict(self)

    def identity(self):
        """Settings that determine the records; the worker count does not."""
        data = self.to_dict()
        data.pop("workers")
        return data

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown campaign keys {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class BenchmarkRecord:
    problem: str
    n: int
    sampler: str
    surrogate: str
    rep: int
    status: str = "ok"
    rloo: float = float("nan")
    rmse: float = float("nan")
    rrie: float = float("nan")
    beta_hat: float = float("nan")
    beta_ref: float = float("nan")
    rrie_tol: float = float("nan")
    disqualified: bool = False
    basis_size: int = 0
    validation_hash: str = ""

    @property
    def key(self):
        return (self.problem, self.n, self.sampler, self.surrogate, self.rep)

    @property
    def ok(self):
        return self.status == "ok"

    def to_row(self):
        row = []
        for c in COLUMNS:
            v = getattr(self, c)
            if c in _FLOATS:
                row.append(repr(float(v)))
            elif c == "disqualified":
                row.append("1" if v else "0")
            else:
                row.append(str(v))
        return row

    @classmethod
    def from_row(cls, row):
        data = dict(zip(COLUMNS, row))
        kw = {}
        for c in COLUMNS:
            v = data[c]
            if c in _FLOATS:
                kw[c] = float(v)
            elif c in ("n", "rep", "basis_size"):
                kw[c] = int(v)
            elif c == "disqualified":
                kw[c] = v == "1"
            else:
                kw[c] = v
        return cls(**kw)


def task_seed(seed, *key):
    """Seed sequence determined by the campaign seed and a record key."""
    digest = hashlib.sha256(repr(key).encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.SeedSequence([int(seed)] + words)


def array_hash(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


def _fmt_row(row):
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(row)
    return buf.getvalue()


def validation_set(problem, m, seed):
    rng = np.random.default_rng(task_seed(seed, "validation", problem.name))
    x = problem.rv.sample(m, rng)
    y = problem.evaluate(x)
    return x, y


def estimate_beta(ls, cov, rng, batch=20_000, max_n=100_000_000, mc_radius=2.0):
    """Reliability index by IS around the design point, or crude MC when it is near the origin.

    A design point closer than ``mc_radius`` means ``P_f`` is large enough for
    crude MC, which is also safe for multi-modal failure domains.
    """
    center = find_proposal_center(ls, rng)
    if np.linalg.norm(center) < mc_radius:
        return monte_carlo_pf(ls, cov, max(batch, 100_000), max(max_n, 100_000), rng).beta
    return importance_sampling_pf(ls, center, cov, batch, max_n, rng).beta


def reference_beta(problem, cov, seed):
    """Reference reliability index of the true model (exact when known)."""
    if problem.ref_source == "exact":
        return float(problem.beta_ref)
    rng = np.random.default_rng(task_seed(seed, "reference", problem.name))
    return estimate_beta(problem.limit_state, cov, rng, max_n=500_000_000)


def hdr_region(problem, alpha, cfg):
    if problem.rv.is_gaussian:
        return gaussian_region(problem.rv, alpha, inflation=0.02)
    return build_region(problem.rv, alpha, cfg.level_cov, task_seed(cfg.seed, "hdr", problem.name, alpha))


# -- worker side ------------------------------------------------------------

_CTX = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _surrogate_metrics(kind, ed, problem, val, beta_ref, cfg, rng):
    if kind == "pce":
        model = train_pce(ed, nu_max=cfg.nu_max)
        rloo = model.loo
        size = len(model.basis)
    else:
        model = train_pck(ed, nu_max=cfg.nu_max, seed=rng, n_starts=cfg.kriging_starts)
        rloo = kriging_loo(model)
        size = len(model.trend_basis)
    x_val, y_val = val
    err = relative_mse(y_val, model.predict(x_val))
    ls = LimitState.from_model(model, problem.rv, problem.threshold, kind)
    beta = estimate_beta(ls, cfg.cov_target, rng, cfg.is_batch, cfg.is_max_n)
    return rloo, err, beta, size


def run_task(task):
    """All records of one (problem, n, sampler, rep) design; one per surrogate kind."""
    problem_name, n, sampler, rep = task
    cfg = _CTX["cfg"]
    problem = get_problem(problem_name)
    val, vhash = _CTX["validation"][problem_name]
    beta_ref = _CTX["references"][problem_name]
    tol = noise_tolerance(beta_ref, cfg.cov_target, cfg.gamma)
    ss = task_seed(cfg.seed, problem_name, n, sampler, rep)
    s_design, *s_models = ss.spawn(1 + len(cfg.surrogates))
    base = dict(problem=problem_name, n=n, sampler=sampler, rep=rep, beta_ref=beta_ref,
                rrie_tol=tol, validation_hash=vhash)
    records, timings = [], []
    try:
        rng = np.random.default_rng(s_design)
        if sampler == SAMPLER_NATURAL:
            x = problem.rv.sample(n, rng)
        else:
            x = sample_hdr(_CTX["regions"][(problem_name, sampler)], n, rng)
        if _overlaps(x, val[0]):
            raise HdrsError("experimental design intersects the validation set")
        ed = ExperimentalDesign(x, problem.evaluate(x), problem.rv, sampler)
    except Exception as exc:  # noqa: BLE001 - recorded, campaign continues
        msg = _status(exc)
        return [BenchmarkRecord(surrogate=k, status=msg, **base) for k in cfg.surrogates], [0.0] * len(cfg.surrogates)
    for kind, s_model in zip(cfg.surrogates, s_models):
        t0 = time.perf_counter()
        try:
            rloo, err, beta_hat, size = _surrogate_metrics(
                kind, ed, problem, val, beta_ref, cfg, np.random.default_rng(s_model))
            e = rrie(beta_hat, beta_ref)
            rec = BenchmarkRecord(surrogate=kind, rloo=rloo, rmse=err, rrie=e, beta_hat=beta_hat,
                                  disqualified=e < tol, basis_size=size, **base)
        except Exception as exc:  # noqa: BLE001
            rec = BenchmarkRecord(surrogate=kind, status=_status(exc), **base)
        records.append(rec)
        timings.append(time.perf_counter() - t0)
    return records, timings


def _status(exc):
    msg = f"{type(exc).__name__}: {exc}".replace("\n", " ").replace(",", ";")
    return "error: " + msg[:200]


def _overlaps(x, x_val):
    seen = {row.tobytes() for row in np.ascontiguousarray(x_val)}
    return any(row.tobytes() in seen for row in np.ascontiguousarray(x))


# -- driver -----------------------------------------------------------------

def campaign_tasks(cfg):
    """Tasks in canonical order."""
    return [(p, n, s, r) for p in cfg.problems for n in cfg.sizes for s in cfg.samplers
            for r in range(cfg.replications)]


def _read_existing(path, repair=True):
    """Complete records already on disk; a torn final line is dropped (and cut from the file)."""
    if not path.exists():
        return []
    raw = path.read_bytes()
    if raw and not raw.endswith(b"\n"):
        raw = raw[: raw.rfind(b"\n") + 1]
        if repair:
            path.write_bytes(raw)
    lines = raw.decode().splitlines()
    if not lines:
        return []
    if tuple(lines[0].split(",")) != COLUMNS:
        raise ValueError(f"{path} has an unexpected header")
    return [BenchmarkRecord.from_row(r) for r in csv.reader(lines[1:])]


def _load_json(path):
    return json.loads(path.read_text()) if path.exists() else None


def run_campaign(cfg, out_dir, progress=None):
    """Run (or resume) a campaign, returning every record in canonical order."""
    cfg.validate_problems()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rec_path, time_path, meta_path = out / RECORDS, out / TIMINGS, out / SIDECAR

    meta = _load_json(meta_path)
    if meta is not None and meta["config"] != cfg.identity():
        raise ValueError(f"{out} holds a campaign with a different configuration")

    problems = {name: get_problem(name) for name in cfg.problems}
    validation = {}
    for name, prob in problems.items():
        x, y = validation_set(prob, cfg.validation_size, cfg.seed)
        validation[name] = ((x, y), array_hash(x, y))

    refs = _load_json(out / REFERENCES) or {}
    for name, prob in problems.items():
        if name not in refs:
            refs[name] = reference_beta(prob, cfg.reference_cov, cfg.seed)
            (out / REFERENCES).write_text(json.dumps(refs, indent=2, sort_keys=True) + "\n")

    regions = {}
    for name, prob in problems.items():
        for a in cfg.alphas:
            regions[(name, hdr_tag(a))] = hdr_region(prob, a, cfg)

    if meta is None:
        meta = {
            "version": __version__,
            "config": cfg.identity(),
            "columns": list(COLUMNS),
            "validation_hash": {k: v[1] for k, v in validation.items()},
            "references": {k: refs[k] for k in cfg.problems},
        }
        meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    existing = _read_existing(rec_path)
    done = len(existing)
    tasks = campaign_tasks(cfg)
    per_task = len(cfg.surrogates)
    if done % per_task:
        # a task's records are written together; drop a partial group
        existing = existing[: done - done % per_task]
        done = len(existing)
        text = "".join([_fmt_row(COLUMNS)] + [_fmt_row(r.to_row()) for r in existing])
        rec_path.write_text(text)
    n_done_tasks = done // per_task
    expected = [(t[0], t[1], t[2], k, t[3]) for t in tasks[:n_done_tasks] for k in cfg.surrogates]
    if [r.key for r in existing] != expected:
        raise ValueError(f"{rec_path} does not match the campaign's task order")

    if not rec_path.exists() or rec_path.stat().st_size == 0:
        rec_path.write_text(_fmt_row(COLUMNS))
    if not time_path.exists():
        time_path.write_text(_fmt_row(("problem", "n", "sampler", "surrogate", "rep", "seconds")))

    ctx = {"cfg": cfg, "validation": validation, "references": refs, "regions": regions}
    todo = tasks[n_done_tasks:]
    records = list(existing)
    if cfg.workers > 1 and len(todo) > 1:
        pool = ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(ctx,))
        results = pool.map(run_task, todo)
    else:
        pool = None
        _init_worker(ctx)
        results = map(run_task, todo)
    try:
        with open(rec_path, "a", newline="") as frec, open(time_path, "a", newline="") as ftime:
            for i, (recs, secs) in enumerate(results):
                frec.write("".join(_fmt_row(r.to_row()) for r in recs))
                frec.flush()
                ftime.write("".join(_fmt_row(list(r.key) + [f"{s:.3f}"]) for r, s in zip(recs, secs)))
                ftime.flush()
                records.extend(recs)
                if progress is not None:
                    progress(n_done_tasks + i + 1, len(tasks), recs)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def load_records(path):
    """Records from a campaign directory or a records CSV file."""
    p = Path(path)
    if p.is_dir():
        p = p / RECORDS
    return _read_existing(p, repair=False) if p.exists() else []
