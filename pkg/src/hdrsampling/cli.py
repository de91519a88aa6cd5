"""Command-line interface ``hdrs``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import HdrsError
from .hdr import HdrRegion, build_region, sample_hdr
from .randvec import RandomVector


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_matrix(path):
    """Numeric CSV; a non-numeric first line is treated as a header."""
    lines = Path(path).read_text().splitlines()
    if lines:
        try:
            [float(v) for v in lines[0].split(",")]
        except ValueError:
            lines = lines[1:]
    rows = [[float(v) for v in ln.split(",")] for ln in lines if ln.strip()]
    return np.atleast_2d(np.array(rows, dtype=float))


def _write_matrix(arr, out=None):
    arr = np.atleast_2d(arr)
    if out:
        np.savetxt(out, arr, delimiter=",", fmt="%.17g")
    else:
        np.savetxt(sys.stdout, arr, delimiter=",", fmt="%.17g")


def _load_plugins(paths):
    if not paths:
        return
    from .problems import load_plugin

    for p in paths:
        load_plugin(p)


# -- hdr ----------------------------------------------------------------------

def cmd_hdr_estimate(args):
    rv = RandomVector.from_json(args.rv)
    region = build_region(rv, args.alpha, args.cov, args.seed, n_box=args.n_box,
                          inflation=args.inflation)
    _emit(region.to_dict(), args.out)
    return 0


def cmd_hdr_sample(args):
    if args.region:
        region = HdrRegion.from_dict(json.loads(Path(args.region).read_text()))
    elif args.rv:
        region = build_region(RandomVector.from_json(args.rv), args.alpha, args.cov, args.seed)
    else:
        raise SystemExit("hdr sample needs --region or --rv")
    _write_matrix(sample_hdr(region, args.n, args.seed), args.out)
    return 0


# -- surrogate ----------------------------------------------------------------

def cmd_surrogate_train(args):
    from .surrogate import ExperimentalDesign, save_model, train_pce, train_pck

    rv = RandomVector.from_json(args.rv)
    data = _read_matrix(args.ed)
    if data.shape[1] != rv.d + 1:
        raise SystemExit(f"expected {rv.d} input columns and one response column")
    ed = ExperimentalDesign(data[:, :-1], data[:, -1], rv, args.sampler)
    if args.kind == "pce":
        model = train_pce(ed, nu_max=args.nu_max)
    else:
        model = train_pck(ed, nu_max=args.nu_max, seed=args.seed)
    save_model(model, args.out)
    return 0


def cmd_surrogate_predict(args):
    from .surrogate import load_model

    model = load_model(args.model)
    _write_matrix(np.asarray(model.predict(_read_matrix(args.x))).reshape(-1, 1), args.out)
    return 0


# -- reliability --------------------------------------------------------------

def cmd_reliability_run(args):
    from .reliability import (LimitState, find_proposal_center, importance_sampling_pf,
                              monte_carlo_pf)

    if args.model:
        from .surrogate import load_model

        model = load_model(args.model)
        ls = LimitState.from_model(model, model.rv, args.threshold, args.model)
        max_n = args.max_n or 100_000_000
    else:
        from .problems import get_problem

        problem = get_problem(args.problem)
        ls = problem.limit_state
        max_n = args.max_n or (1_000_000 if problem.ref_source == "plugin" else 100_000_000)
    rng = np.random.default_rng(args.seed)
    if args.method == "mc":
        est = monte_carlo_pf(ls, args.cov, args.batch, max_n, rng)
    else:
        center = find_proposal_center(ls, rng)
        est = importance_sampling_pf(ls, center, args.cov, args.batch, max_n, rng)
    _emit(est.to_dict(), args.out)
    return 0


# -- bench --------------------------------------------------------------------

def cmd_bench_run(args):
    from .bench import CampaignConfig, run_campaign

    cfg = CampaignConfig.from_json(args.config)
    if args.workers:
        cfg.workers = args.workers

    def progress(i, total, recs):
        if not args.quiet:
            bad = [r.status for r in recs if not r.ok]
            tag = "; ".join(bad) if bad else "ok"
            print(f"[{i}/{total}] {recs[0].problem} n={recs[0].n} {recs[0].sampler} "
                  f"rep={recs[0].rep}: {tag}", file=sys.stderr, flush=True)

    records = run_campaign(cfg, args.out, progress)
    failed = sum(not r.ok for r in records)
    print(json.dumps({"records": len(records), "failed": failed, "out": str(args.out)}))
    return 0 if failed == 0 else 1


def cmd_bench_rank(args):
    from .bench import load_records, rank_heats

    ranking = rank_heats(load_records(args.input), args.metric)
    _emit(ranking.to_dict(), args.out)
    return 0


def cmd_bench_summarize(args):
    from .bench import load_records, summarize
    from .bench.ranking import summary_csv, summary_json

    rows = summarize(load_records(args.input))
    text = summary_csv(rows) if args.format == "csv" else summary_json(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_problems_list(args):
    from .problems import EMPTY_SLOTS, available_problems

    _emit({"available": available_problems(), "empty_slots": EMPTY_SLOTS})
    return 0


# -- parser -------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="hdrs", description="HDR sampling for surrogate training.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--plugin", action="append", help="problem plug-in JSON (repeatable)")
    top = p.add_subparsers(dest="group", required=True)

    hdr = top.add_parser("hdr", help="HDR level estimation and sampling").add_subparsers(
        dest="cmd", required=True)
    q = hdr.add_parser("estimate", help="estimate the HDR level and bounding box")
    q.add_argument("--rv", required=True, help="random vector JSON")
    q.add_argument("--alpha", type=float, default=0.01)
    q.add_argument("--cov", type=float, default=0.01)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--n-box", type=int, default=100_000)
    q.add_argument("--inflation", type=float, default=0.02)
    q.add_argument("--out")
    q.set_defaults(func=cmd_hdr_estimate)
    q = hdr.add_parser("sample", help="draw points uniformly in the HDR")
    q.add_argument("--region", help="region JSON from 'hdr estimate'")
    q.add_argument("--rv", help="random vector JSON (region built on the fly)")
    q.add_argument("--alpha", type=float, default=0.01)
    q.add_argument("--cov", type=float, default=0.01)
    q.add_argument("-n", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_hdr_sample)

    sur = top.add_parser("surrogate", help="train and evaluate surrogates").add_subparsers(
        dest="cmd", required=True)
    q = sur.add_parser("train")
    q.add_argument("--ed", required=True, help="CSV with input columns then the response")
    q.add_argument("--rv", required=True)
    q.add_argument("--kind", choices=("pce", "pck"), default="pce")
    q.add_argument("--nu-max", type=int)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--sampler", default="natural", help="tag stored with the design")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_surrogate_train)
    q = sur.add_parser("predict")
    q.add_argument("--model", required=True)
    q.add_argument("--x", required=True, help="CSV of input rows")
    q.add_argument("--out")
    q.set_defaults(func=cmd_surrogate_predict)

    rel = top.add_parser("reliability", help="failure probability").add_subparsers(
        dest="cmd", required=True)
    q = rel.add_parser("run")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="surrogate JSON; failure is model(x) <= threshold")
    src.add_argument("--problem", help="problem name, e.g. franke or ddim:5:1e-4")
    q.add_argument("--threshold", type=float, default=0.0)
    q.add_argument("--method", choices=("mc", "is"), default="mc")
    q.add_argument("--cov", type=float, default=0.01)
    q.add_argument("--batch", type=int, default=100_000)
    q.add_argument("--max-n", type=int)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_reliability_run)

    bench = top.add_parser("bench", help="benchmark campaigns").add_subparsers(
        dest="cmd", required=True)
    q = bench.add_parser("run")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--workers", type=int)
    q.add_argument("--quiet", action="store_true")
    q.set_defaults(func=cmd_bench_run)
    q = bench.add_parser("rank")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--metric", choices=("rloo", "rmse", "rrie"), default="rmse")
    q.add_argument("--out")
    q.set_defaults(func=cmd_bench_rank)
    q = bench.add_parser("summarize")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--format", choices=("csv", "json"), default="csv")
    q.add_argument("--out")
    q.set_defaults(func=cmd_bench_summarize)

    prob = top.add_parser("problems", help="problem registry").add_subparsers(
        dest="cmd", required=True)
    q = prob.add_parser("list")
    q.set_defaults(func=cmd_problems_list)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _load_plugins(args.plugin)
        return args.func(args)
    except (HdrsError, ValueError, KeyError, OSError) as exc:
        print(f"hdrs: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
