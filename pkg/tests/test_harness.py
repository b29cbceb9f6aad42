import json

import numpy as np
import pytest

from sampled_topk.core import GlobalRankSet, MetricSpec, RankPmf
from sampled_topk.harness import (
    REPORT_COLUMNS,
    ExperimentConfig,
    draw_population,
    multinomial_variance_check,
    run_experiment,
    synth_rank_pmf,
    winner_accuracy,
)
from sampled_topk.metrics import empirical_pmf, global_metric


def test_synth_pmf_shapes():
    np.testing.assert_allclose(synth_rank_pmf(1.0, 50).probs, 1 / 50)
    assert np.all(np.diff(synth_rank_pmf(0.5, 500).probs) < 0)
    for a in (0.2, 0.5, 1.0, 2.0):
        assert abs(synth_rank_pmf(a, 1000).probs.sum() - 1) < 1e-9


def test_synth_pmf_first_cell_integrates_density():
    a, N = 0.5, 101
    w = synth_rank_pmf(a, N).probs
    dx = 1 / (N - 1)
    assert w[0] / w[1] == pytest.approx((dx**a / a) / (dx ** (a - 1) * dx))


def test_draw_population():
    assert np.all(draw_population(RankPmf.point_mass(10, 4), 100, 0).ranks == 4)
    assert draw_population(RankPmf.uniform(10), 100, 5) == draw_population(RankPmf.uniform(10), 100, 5)
    M, N = 1_000_000, 50
    freq = empirical_pmf(draw_population(RankPmf.uniform(N), M, 1)).probs
    se = np.sqrt((1 / N) * (1 - 1 / N) / M)
    assert np.abs(freq - 1 / N).max() < 5 * se


def small_config(**kw):
    base = dict(n_items=300, n_users=3000, sample_size=30, repeats=4, k_max=20,
                estimators=["oracle", "MLE", "BV", "MN_MLE"], metrics=["recall", "ndcg"])
    base.update(kw)
    return ExperimentConfig(**base)


def test_oracle_has_zero_error():
    rep = run_experiment(small_config())
    assert rep.lookup("oracle", "recall")["mean_rel_err_pct"] == 0
    assert rep.lookup("oracle", "ndcg")["std_rel_err_pct"] == 0


def test_census_mle_near_zero():
    rep = run_experiment(small_config(scheme="without", sample_size=300, estimators=["MLE"]))
    assert rep.lookup("MLE")["mean_rel_err_pct"] < 1e-3


def test_report_csv_columns_and_workers():
    cfg = small_config()
    serial = run_experiment(cfg).to_csv()
    assert serial.splitlines()[0] == ",".join(REPORT_COLUMNS)
    assert run_experiment(cfg, workers=2).to_csv() == serial


def test_adaptive_report_has_mean_sample_size():
    cfg = small_config(estimators=["AdaptiveMLE"], adaptive_n0=10, adaptive_n_max=80)
    size = run_experiment(cfg).lookup("AdaptiveMLE")["mean_sample_size"]
    assert 10 <= size <= 80


def test_config_json_round_trip(tmp_path):
    cfg = small_config()
    (tmp_path / "c.json").write_text(cfg.to_json())
    assert ExperimentConfig.from_json(tmp_path / "c.json") == cfg
    (tmp_path / "bad.json").write_text(json.dumps({"n_items": 10, "bogus": 1}))
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(tmp_path / "bad.json")


def test_config_validation():
    with pytest.raises(ValueError):
        small_config(repeats=0)
    with pytest.raises(ValueError):
        small_config(estimators=["AdaptiveMLE"])
    with pytest.raises(ValueError):
        small_config(estimators=["nope"])


def test_winner_identical_populations():
    pop = draw_population(synth_rank_pmf(0.5, 300), 3000, 0)
    acc = winner_accuracy([pop, pop, pop], small_config(estimators=["MLE", "MN_MLE"], repeats=3))
    assert acc == {"MLE": 1.0, "MN_MLE": 1.0}


def test_winner_large_gap():
    weak = draw_population(synth_rank_pmf(0.8, 2000), 25_000, 1)
    # mix in a block of users ranked first to open a wide Recall@10 gap
    strong_ranks = weak.ranks.copy()
    strong_ranks[:5000] = 1
    strong = GlobalRankSet(2000, strong_ranks)
    cfg = ExperimentConfig(n_items=2000, n_users=25_000, sample_size=100, repeats=100,
                           estimators=["MLE"], k_max=10)
    spec = MetricSpec("recall", 10)
    assert global_metric(strong, spec) - global_metric(weak, spec) >= 0.19
    assert winner_accuracy([weak, strong], cfg, spec)["MLE"] == 1.0


def test_winner_scale_invariance():
    values = np.array([0.2, 0.5, 0.5, 0.1])
    assert np.argmax(values) == np.argmax(values * 3.7) == 1


def test_variance_check_degenerate_cases():
    theta = np.array([0.2, 0.3, 0.5])
    assert multinomial_variance_check(np.full(3, 2.0), theta, 100, 1000, 0)[1] == 0
    emp, ana, z = multinomial_variance_check(np.array([1.0, 5.0, 2.0]), np.array([0, 1.0, 0]), 100, 1000, 0)
    assert emp == 0 and ana == 0 and z == 0


def test_variance_check_random():
    rng = np.random.default_rng(7)
    w, theta = rng.random(20), rng.dirichlet(np.ones(20))
    emp, ana, z = multinomial_variance_check(w, theta, 100, 100_000, 3)
    assert ana == pytest.approx(100 * (w**2 @ theta - (w @ theta) ** 2))
    assert abs(z) < 4
