import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdrsampling.bench import (
    BenchmarkRecord,
    CampaignConfig,
    campaign_tasks,
    load_records,
    median_of,
    noise_tolerance,
    rank_heats,
    relative_mse,
    rmse,
    rrie,
    run_campaign,
    summarize,
)
from hdrsampling.bench.campaign import RECORDS, task_seed
from hdrsampling.bench.ranking import BINS, rank_bin, summary_csv
from hdrsampling.randvec import gaussian
from hdrsampling.surrogate import MultiIndexSet, PceModel

# 2.3263 * 1e-3 * Phi(-3.47) / (3.47 * phi(3.47)), 50-digit evaluation
NOISE_TOL_347 = 0.0001800691557502773


def rec(sampler, value, rep=0, surrogate="pck", problem="p", n=50, **kw):
    return BenchmarkRecord(problem, n, sampler, surrogate, rep, rmse=value, rloo=value,
                           rrie=value, **kw)


def tiny_config(**kw):
    base = dict(problems=["ddim:2:0.01"], sizes=[30], replications=2, validation_size=2000,
                cov_target=0.05, kriging_starts=2, nu_max=3, is_batch=5000)
    base.update(kw)
    return CampaignConfig(**base)


# -- metrics ----------------------------------------------------------------

def test_noise_tolerance_example():
    assert noise_tolerance(3.47, 1e-3, 0.01) == pytest.approx(NOISE_TOL_347, rel=1e-12)
    assert noise_tolerance(3.47) == pytest.approx(1.8e-4, rel=0.01)


def test_rrie_examples():
    assert rrie(1.58, 1.58) == 0.0
    assert rrie(1.6748, 1.58) == pytest.approx(0.06, rel=1e-12)
    with pytest.raises(ValueError):
        rrie(1.0, 0.0)


def test_relative_mse_definitions(rng):
    y = rng.standard_normal(1000)
    assert relative_mse(y, y) == 0.0
    assert relative_mse(y, np.full_like(y, y.mean())) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        relative_mse(np.ones(3), np.zeros(3))


def test_rmse_of_model():
    rv = gaussian([0], [1])
    model = PceModel(MultiIndexSet(np.array([[0], [1]]), 1), [0.0, 1.0], 0.0, rv)
    x = rv.sample(100, 0)
    assert rmse(model, (x, x[:, 0])) == 0.0


# -- ranking ----------------------------------------------------------------

def test_rank_bins():
    assert rank_bin(0, 200) == "best"
    assert [rank_bin(p, 100) for p in (1, 5, 10, 25, 50, 99)] == [
        "5%", "10%", "25%", "50%", "rest", "rest"]


def test_hdr_wins_two_participant_heat():
    r = rank_heats([rec("hdr(0.01)", 1e-3), rec("natural", 2e-3)], "rmse")
    assert r.heats[0].winner == "hdr(0.01)"
    assert r.totals["pck"]["hdr(0.01)"]["best"] == 1


def test_all_disqualified_heat_contributes_nothing():
    recs = [rec("hdr(0.01)", 1e-5, disqualified=True), rec("natural", 1e-5, disqualified=True)]
    r = rank_heats(recs, "rrie")
    assert r.heats[0].ranking == []
    assert r.heats[0].disqualified == 2
    assert sum(sum(b.values()) for b in r.totals["pck"].values()) == 0


def test_failed_records_are_not_ranked():
    recs = [rec("natural", 1.0), BenchmarkRecord("p", 50, "hdr(0.01)", "pck", 0, status="error: x")]
    r = rank_heats(recs)
    assert [e[0] for e in r.heats[0].ranking] == ["natural"]


def test_no_records_is_an_error():
    with pytest.raises(ValueError):
        rank_heats([])


@settings(max_examples=30, deadline=None)
@given(values=st.lists(st.floats(1e-9, 1.0), min_size=2, max_size=60),
       heats=st.integers(1, 4))
def test_rank_conservation(values, heats):
    recs = [rec("natural" if i % 2 else "hdr(0.01)", v, rep=i, n=50 + i % heats)
            for i, v in enumerate(values)]
    r = rank_heats(recs, "rmse")
    total = sum(c for per in r.totals.values() for b in per.values() for c in b.values())
    assert total == len(values)
    assert set(BINS) == set(next(iter(r.totals["pck"].values())))
    assert all(sum(1 for e in h.ranking if e[3] == "best") == 1 for h in r.heats)


def test_summary_percentiles():
    recs = [rec("natural", float(v), rep=v) for v in range(1, 11)]
    row = summarize(recs)[0]
    assert (row["rmse_min"], row["rmse_median"], row["rmse_max"]) == (1.0, 5.5, 10.0)
    assert row["count"] == 10
    same = summarize([rec("natural", 0.3, rep=i) for i in range(4)])[0]
    assert len({same[f"rmse_{k}"] for k in ("min", "p10", "median", "p90", "max")}) == 1
    assert summary_csv(summarize(recs)).startswith("problem,sampler,surrogate,n,count,")
    assert median_of(recs, "rmse", sampler="natural") == 5.5


# -- campaign ---------------------------------------------------------------

def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        CampaignConfig.from_dict({"problems": ["franke"], "bogus": 1})
    with pytest.raises(ValueError):
        CampaignConfig(surrogates=["nn"])


def test_task_order_and_seeds():
    cfg = tiny_config()
    tasks = campaign_tasks(cfg)
    assert tasks[0] == ("ddim:2:0.01", 30, "natural", 0)
    assert len(tasks) == 4
    a = task_seed(0, *tasks[0]).generate_state(4)
    assert np.array_equal(a, task_seed(0, *tasks[0]).generate_state(4))
    assert not np.array_equal(a, task_seed(0, *tasks[1]).generate_state(4))


def test_record_row_round_trip():
    r = rec("natural", 0.1 + 0.2, disqualified=True, basis_size=7)
    back = BenchmarkRecord.from_row(r.to_row())
    assert back.to_row() == r.to_row()
    assert back.rmse == 0.1 + 0.2 and back.disqualified


@pytest.fixture(scope="module")
def tiny_campaign(tmp_path_factory):
    out = tmp_path_factory.mktemp("campaign")
    cfg = tiny_config()
    records = run_campaign(cfg, out)
    return cfg, out, records


def test_campaign_cardinality(tiny_campaign):
    cfg, out, records = tiny_campaign
    one = tiny_config(replications=1)
    assert len(campaign_tasks(one)) * len(one.surrogates) == 4
    assert len(records) == 8
    assert all(r.ok for r in records), [r.status for r in records]
    assert load_records(out) == records
    meta = json.loads((out / "records.meta.json").read_text())
    assert meta["config"] == cfg.identity()


def test_campaign_values_are_sane(tiny_campaign):
    _, _, records = tiny_campaign
    for r in records:
        assert r.beta_ref == pytest.approx(2.3263478740408408)
        assert 0 <= r.rmse < 1 and r.rloo >= 0 and np.isfinite(r.beta_hat)
        assert r.disqualified == (r.rrie < r.rrie_tol)


def test_resume_after_truncation_is_identical(tiny_campaign, tmp_path):
    cfg, out, _ = tiny_campaign
    full = (out / RECORDS).read_bytes()
    for name in ("records.meta.json", "references.json"):
        (tmp_path / name).write_bytes((out / name).read_bytes())
    lines = full.splitlines(keepends=True)
    # header, one complete task, one record of the next task, then a torn line
    (tmp_path / RECORDS).write_bytes(b"".join(lines[:4]) + lines[4][:17])
    run_campaign(cfg, tmp_path)
    assert (tmp_path / RECORDS).read_bytes() == full


def test_resume_rejects_changed_config(tiny_campaign):
    _, out, _ = tiny_campaign
    with pytest.raises(ValueError):
        run_campaign(tiny_config(seed=5), out)


def test_worker_count_does_not_change_records(tiny_campaign, tmp_path):
    cfg, out, _ = tiny_campaign
    run_campaign(tiny_config(workers=2), tmp_path)
    assert (tmp_path / RECORDS).read_bytes() == (out / RECORDS).read_bytes()
    # resuming a finished campaign with another worker count is a no-op
    before = (out / RECORDS).read_bytes()
    run_campaign(tiny_config(workers=2), out)
    assert (out / RECORDS).read_bytes() == before
