import numpy as np
import pytest
from hypothesis import given, strategies as st

from sampled_topk.core import (
    EmptySet,
    GlobalRankSet,
    MetricSpec,
    RankOutOfRange,
    RankPmf,
    SampledEvalError,
    SampledRankSet,
    SizeMismatch,
    validate_rank_set,
)


def test_metric_spec_rejects_zero_cutoff():
    with pytest.raises(SampledEvalError):
        MetricSpec("recall", 0)


def test_metric_spec_coerces_kind():
    assert MetricSpec("ndcg", 5).kind.value == "ndcg"
    with pytest.raises(ValueError):
        MetricSpec("mrr", 5)


@pytest.mark.parametrize("probs", [[0.5, 0.6], [1.2, -0.2], [np.nan, 1.0]])
def test_rank_pmf_rejects_bad_probs(probs):
    with pytest.raises(SampledEvalError):
        RankPmf(2, np.array(probs))


def test_rank_pmf_constructors():
    assert RankPmf.uniform(4)[3] == 0.25
    assert RankPmf.point_mass(5, 2).probs.tolist() == [0, 1, 0, 0, 0]
    assert RankPmf.from_weights([1, 3]) == RankPmf(2, np.array([0.25, 0.75]))
    with pytest.raises(SampledEvalError):
        RankPmf.from_weights([0, 0])


def test_rank_pmf_is_read_only():
    pmf = RankPmf.uniform(3)
    with pytest.raises(ValueError):
        pmf.probs[0] = 1.0


def test_global_rank_set_bounds():
    with pytest.raises(RankOutOfRange) as err:
        GlobalRankSet(10, [1, 11, 3])
    assert err.value.user == 1
    with pytest.raises(EmptySet):
        GlobalRankSet(10, [])


def test_sampled_rank_set_checks_rank_against_own_size():
    SampledRankSet(100, [1, 5], [5, 10])
    with pytest.raises(RankOutOfRange):
        SampledRankSet(100, [6, 5], [5, 10])
    with pytest.raises(RankOutOfRange):
        SampledRankSet(100, [1], [200])
    SampledRankSet(100, [1], [200], allow_oversize=True)


def test_fixed_size_helpers():
    s = SampledRankSet.fixed(50, [1, 2, 2, 4], 4)
    assert s.is_fixed_size and s.sample_size == 4
    np.testing.assert_allclose(s.rank_distribution(), [0.25, 0.5, 0, 0.25])
    assert [o.rank for o in s.observations] == [1, 2, 2, 4]
    adaptive = SampledRankSet(50, [1, 2], [4, 8])
    with pytest.raises(SizeMismatch):
        adaptive.sample_size


@given(st.lists(st.integers(1, 30), min_size=1, max_size=50))
def test_validate_accepts_every_in_range_set(ranks):
    assert validate_rank_set(GlobalRankSet(30, ranks)) is None


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=40).filter(lambda w: sum(w) > 0))
def test_from_weights_always_normalises(weights):
    pmf = RankPmf.from_weights(weights)
    assert abs(pmf.probs.sum() - 1) < 1e-9
