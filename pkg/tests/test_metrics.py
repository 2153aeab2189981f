"""Property suites for the metrics that have no reference values to compare against:
frame-budget violations V(tau), spawn realisation rho_spawn and blocker overlap J."""
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from runnerpcg import RunConfig, metrics, run
from runnerpcg.engine import recompute_metrics

ids = st.sets(st.integers(0, 50), max_size=20)
times = st.lists(st.floats(0, 100, allow_nan=False), max_size=200)


@given(times, st.floats(0, 100))
def test_frame_violation_is_a_fraction(samples, tau):
    v = metrics.frame_violation(samples, tau)
    if not samples:
        assert v is None
    else:
        assert 0.0 <= v <= 1.0
        assert v == sum(s > tau for s in samples) / len(samples)


@given(times, st.floats(0, 50), st.floats(0, 50))
def test_frame_violation_monotone_in_budget(samples, a, b):
    lo, hi = sorted((a, b))
    if samples:
        assert metrics.frame_violation(samples, hi) <= metrics.frame_violation(samples, lo)


def test_frame_violation_boundary_is_strict():
    assert metrics.frame_violation([33.33], 33.33) == 0.0
    assert metrics.frame_violation([33.330001], 33.33) == 1.0


@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_rho_spawn_ratio(spawned, intended):
    r = metrics.rates(0, 0, 0, 0, 0, 0.0, spawned, intended)["rho_spawn"]
    assert r is None if intended == 0 else r == spawned / intended


def test_rho_spawn_in_runs_never_exceeds_one():
    _, s = run(RunConfig(run_length=1500, seed=6))
    rq2 = s["RQ2"]
    assert 0.0 < rq2["rho_spawn"] <= 1.0
    assert all(0.0 <= r <= 1.0 for r in rq2["rho_spawn_series"])
    assert rq2["O_spawned"] == sum(rq2["realized_series"])


@given(ids, ids)
def test_jaccard_properties(a, g):
    j = metrics.jaccard(a, g)
    if not a and not g:
        assert j["J"] is None
        return
    assert 0.0 <= j["J"] <= 1.0
    assert j["J"] == metrics.jaccard(g, a)["J"]
    assert j["J"] + j["C_unique"] == pytest.approx(1.0)
    assert (j["J"] == 1.0) == (a == g)


@given(st.dictionaries(st.text(max_size=3), st.integers(0, 100), max_size=10), st.integers(2, 12))
def test_entropy_bounds(hist, K):
    K = max(K, len(hist))
    e = metrics.prefab_entropy(hist, K)
    if sum(hist.values()) == 0:
        assert e["H"] is None
    else:
        assert -1e-12 <= e["H"] <= math.log2(K) + 1e-12
        assert -1e-12 <= e["H_norm"] <= 1.0 + 1e-12


def test_undefined_ratios_are_none():
    r = metrics.rates(0, 0, 0, 0, 0, 0.0)
    assert r["R_block"] is None and r["R_pass"] is None and r["R_remove"] is None
    assert r["R_recover"] is None and r["rho_spawn"] is None


def test_offline_fold_equals_live_summary():
    state, s = run(RunConfig(run_length=2500, seed=8, auto_remove=True))
    offline = recompute_metrics(state.events, state.catalog)
    for group in ("RQ1", "RQ2", "RQ3", "RQ4"):
        assert offline[group] == s[group]
    assert offline["distance"] == s["distance"]


def test_offline_fold_from_jsonl(tmp_path):
    from runnerpcg.engine import read_events, write_events

    state, s = run(RunConfig(run_length=1200, seed=2))
    events = read_events(write_events(state.events, tmp_path / "events.jsonl"))
    assert recompute_metrics(events, state.catalog)["RQ1"] == s["RQ1"]


def test_removed_subset_of_detected_in_runs():
    _, s = run(RunConfig(run_length=2000, seed=4, auto_remove=True))
    rq1 = s["RQ1"]
    assert rq1["removed_subset_of_detected"]
    assert rq1["B_removed"] <= rq1["B_detected"]
    assert rq1["R_block"] + rq1["R_pass"] == 1.0
