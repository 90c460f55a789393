import numpy as np
import pytest

from sublinrej.builders import ClassViolationError
from sublinrej.experiments import (
    band_overlap,
    bandit_experiment,
    bench,
    envelope_report,
    geometric_gof,
    kth_profile,
    loglog_slope,
    monte_carlo_increment,
    query_budget,
    random_round,
    ratio_bound,
    ratio_factor_variance,
    sweep,
    verify,
)


def test_budgets():
    assert query_budget("monotone", 2 ** 20) == 21
    assert query_budget("unimodal", 8) == 15
    assert query_budget("logconcave", 2 ** 20) == 8
    assert query_budget("tree", 2 ** 11 - 1) == 511
    assert ratio_bound("tree", 15) == 1.0
    with pytest.raises(ValueError):
        query_budget("convex", 4)


@pytest.mark.parametrize("tag,size", [("monotone", 2 ** 20), ("logconcave", 2 ** 20), ("tree", 10),
                                      ("harmonic", 4096), ("cliff", 100), ("geometric", 64)])
def test_envelope_report_passes(tag, size):
    rep = envelope_report(tag, size, seed=1)
    assert rep["passed"]
    if tag == "tree":
        assert rep["queries_used"] == 511 and rep["N"] == 2047


def test_report_rejects_out_of_class_instance():
    with pytest.raises(ClassViolationError):
        envelope_report("monotone", 4, instance=np.array([1.0, 2.0, 1.0, 0.5]))


def test_sweep_monotone_affine():
    res = sweep("monotone", [2 ** k for k in range(4, 15)], range(3))
    assert res.fit["r_squared"] >= 0.99
    assert all(r["all_passed"] for r in res.rows)


def test_sweep_tree_inverse_depth():
    res = sweep("tree", range(4, 13), range(2))
    assert res.fit["within_factor_2"]


def test_bandit_experiment_aggregates():
    runs, curve = bandit_experiment("fast", "fixed_partition", 16, 100, seeds=[2, 0, 1])
    assert [r.config.seed for r in runs] == [0, 1, 2]
    assert curve.n_seeds == 3 and curve.mean.size == 100


def test_band_overlap():
    assert band_overlap([1, 2, 3], [2, 3, 4])["overlap"]
    assert not band_overlap([1.0, 1.1, 0.9], [10.0, 10.1, 9.9])["overlap"]


def test_bench_rows():
    rows = bench([64, 128], batches=2, warmup=5)
    assert {(r["K"], r["algo"]) for r in rows} == {(64, "exp3"), (64, "fast"), (128, "exp3"), (128, "fast")}
    assert all(r["ns_per_iter"] > 0 for r in rows)


def test_kth_profile_grows_slowly():
    rows = kth_profile([64, 1024], rounds=50)
    assert rows[0]["kth_per_iter"] < rows[1]["kth_per_iter"] < 4 * rows[0]["kth_per_iter"]


def test_loglog_slope():
    assert loglog_slope([1, 2, 4, 8], [3, 6, 12, 24]) == pytest.approx(1.0)


def test_monte_carlo_increment_unbiased(rng):
    state, _ = random_round(8, rng)
    mean, se = monte_carlo_increment(state, 3, 0.7, 200_000, rng, m=2)
    assert abs(mean - 0.7) <= 4 * se


def test_ratio_factor_variance_shrinks(rng):
    state, _ = random_round(32, rng)
    v1 = ratio_factor_variance(state, 1, 50_000, rng)
    v16 = ratio_factor_variance(state, 16, 50_000, rng)
    assert v16 == pytest.approx(v1 / 16, rel=0.15)


def test_geometric_gof(rng):
    trials = rng.geometric(0.4, 20000)
    assert geometric_gof(trials, 0.4)[1] > 1e-3
    assert geometric_gof(trials, 0.6)[1] < 1e-3
    assert geometric_gof(np.ones(10, dtype=int), 1.0) == (0.0, 1.0)


def test_verify_all_passes():
    assert all(r.ok for r in verify())


def test_verify_negative_controls():
    bad = [r for r in verify("dominance", inject="nonmonotone") if not r.ok]
    assert [r.name for r in bad] == ["dominance/injected-nonmonotone"]
    bad = [r for r in verify("dominance", inject="halved-lambda") if not r.ok]
    assert [r.name for r in bad] == ["dominance/injected-halved-lambda"]
    assert "exceeds envelope" in bad[0].detail


def test_verify_unknown_suite():
    with pytest.raises(ValueError):
        verify("everything")
