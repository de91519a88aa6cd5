"""Heat-based ranking of sampling schemes and box-plot summaries."""
from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

METRICS = ("rloo", "rmse", "rrie")
BINS = ("best", "5%", "10%", "25%", "50%", "rest")
_EDGES = ((0.05, "5%"), (0.10, "10%"), (0.25, "25%"), (0.50, "50%"))
PERCENTILES = (0, 10, 50, 90, 100)
_SUMMARY_NAMES = ("min", "p10", "median", "p90", "max")


def rank_bin(position, total):
    """Quantile bin of a 0-based ``position`` among ``total`` ranked entrants."""
    if position == 0:
        return "best"
    q = position / total
    for edge, name in _EDGES:
        if q < edge:
            return name
    return "rest"


@dataclass
class Heat:
    surrogate: str
    problem: str
    n: int
    participants: int
    disqualified: int
    ranking: list  # (sampler, rep, value, bin) in rank order
    counts: dict  # sampler -> bin -> count

    @property
    def winner(self):
        return self.ranking[0][0] if self.ranking else None


@dataclass
class HeatRanking:
    metric: str
    heats: list = field(default_factory=list)
    totals: dict = field(default_factory=dict)  # surrogate -> sampler -> bin -> count

    def to_dict(self):
        return {
            "metric": self.metric,
            "totals": self.totals,
            "heats": [
                {"surrogate": h.surrogate, "problem": h.problem, "n": h.n,
                 "participants": h.participants, "disqualified": h.disqualified,
                 "winner": h.winner, "counts": h.counts}
                for h in self.heats
            ],
        }

    def table(self):
        """Flat rows ``(surrogate, sampler, bin, count, share)``."""
        rows = []
        for sur, per in sorted(self.totals.items()):
            ranks = sum(sum(b.values()) for b in per.values())
            for sampler, bins in sorted(per.items()):
                for b in BINS:
                    c = bins.get(b, 0)
                    rows.append((sur, sampler, b, c, c / ranks if ranks else 0.0))
        return rows


def _value(rec, metric):
    return float(getattr(rec, metric))


def rank_heats(records, metric="rmse"):
    """Joint ranking of all samplers for each (surrogate, problem, n) heat.

    Failed records do not take part. For ``rrie`` entrants whose error is
    below the noise-only tolerance are disqualified.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    groups = defaultdict(list)
    for r in records:
        groups[(r.surrogate, r.problem, r.n)].append(r)
    if not groups:
        raise ValueError("no records to rank")
    out = HeatRanking(metric)
    totals = defaultdict(lambda: defaultdict(lambda: dict.fromkeys(BINS, 0)))
    for (sur, prob, n), recs in sorted(groups.items()):
        entrants = [r for r in recs if r.ok and math.isfinite(_value(r, metric))]
        dq = 0
        if metric == "rrie":
            dq = sum(r.disqualified for r in entrants)
            entrants = [r for r in entrants if not r.disqualified]
        entrants.sort(key=lambda r: (_value(r, metric), r.sampler, r.rep))
        counts = {s: dict.fromkeys(BINS, 0) for s in sorted({r.sampler for r in recs})}
        ranking = []
        for i, r in enumerate(entrants):
            b = rank_bin(i, len(entrants))
            counts[r.sampler][b] += 1
            totals[sur][r.sampler][b] += 1
            ranking.append((r.sampler, r.rep, _value(r, metric), b))
        for s in counts:
            totals[sur][s]  # samplers that never ranked still appear
        out.heats.append(Heat(sur, prob, n, len(recs), dq, ranking, counts))
    out.totals = {k: {s: dict(b) for s, b in v.items()} for k, v in totals.items()}
    return out


def summarize(records, metrics=METRICS):
    """Five-number summary (min, p10, median, p90, max) per group and metric."""
    groups = defaultdict(list)
    for r in records:
        if r.ok:
            groups[(r.problem, r.sampler, r.surrogate, r.n)].append(r)
    rows = []
    for (prob, sampler, sur, n), recs in sorted(groups.items()):
        row = {"problem": prob, "sampler": sampler, "surrogate": sur, "n": n, "count": len(recs)}
        for m in metrics:
            vals = np.array([_value(r, m) for r in recs])
            vals = vals[np.isfinite(vals)]
            qs = np.percentile(vals, PERCENTILES) if vals.size else [float("nan")] * 5
            for name, q in zip(_SUMMARY_NAMES, qs):
                row[f"{m}_{name}"] = float(q)
        rows.append(row)
    return rows


def summary_csv(rows):
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def summary_json(rows):
    return json.dumps(rows, indent=2)


def median_of(records, metric, **match):
    vals = [_value(r, metric) for r in records
            if r.ok and all(getattr(r, k) == v for k, v in match.items())]
    vals = [v for v in vals if math.isfinite(v)]
    return float(np.median(vals)) if vals else float("nan")
