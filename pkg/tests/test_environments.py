import numpy as np
import pytest

from sublinrej.environments import (
    ChangingCliff,
    CustomTable,
    FixedPartition,
    LossRangeError,
    StochasticSlope,
    make_environment,
)


def test_fixed_partition_zero_count():
    env = make_environment("fixed_partition", 256, seed=0)
    assert len(env.zero_arms) == 26
    assert np.sum(env.mean_losses(1) == 0) == 26
    assert FixedPartition(5, 0.01).zero_arms.size == 1


def test_fixed_partition_losses():
    env = FixedPartition(20, 0.1, seed=3)
    zero = set(env.zero_arms.tolist())
    for arm in range(1, 21):
        assert env.loss(7, arm) == (0.0 if arm in zero else 1.0)
    np.testing.assert_array_equal(env.best_cumulative(4), np.zeros(4))


def test_changing_cliff_change_points():
    env = make_environment("changing_cliff", 50, 20000, seed=1)
    assert env.change_points == [4000, 8000, 12000, 16000]
    assert env.phase(4000) == 0 and env.phase(4001) == 1 and env.phase(20000) == 4


def test_changing_cliff_best_cumulative_matches_loop():
    env = ChangingCliff(12, 50, zero_fraction=0.2, phases=5, seed=2)
    cum = np.zeros(12)
    expect = []
    for t in range(1, 51):
        cum += env.mean_losses(t)
        expect.append(cum.min())
    np.testing.assert_array_equal(env.best_cumulative(50), expect)


def test_stochastic_slope(rng):
    env = StochasticSlope(10)
    assert all(env.loss(t, 1, rng) == 0.0 for t in range(1, 200))
    draws = np.array([env.loss(1, 8, rng) for _ in range(40000)])
    assert draws.mean() == pytest.approx(env.mean_losses(1)[7], abs=0.01)
    low = np.array([env.loss(1, 2, rng) for _ in range(40000)])
    assert low.mean() == pytest.approx(env.mean_losses(1)[1], abs=0.005)


def test_custom_table():
    env = CustomTable([[0.0, 1.0], [1.0, 0.0]])
    assert env.loss(1, 2) == 1.0 and env.loss(2, 2) == 0.0
    np.testing.assert_array_equal(env.best_cumulative(2), [0.0, 1.0])


def test_custom_table_range():
    with pytest.raises(LossRangeError):
        CustomTable([0.5, 1.5])


@pytest.mark.parametrize("z", [0.0, -0.1, 1.5])
def test_bad_fraction(z):
    with pytest.raises(ValueError):
        make_environment("fixed_partition", 10, zero_fraction=z)


def test_unknown_kind():
    with pytest.raises(ValueError):
        make_environment("adaptive", 10)


def test_changing_cliff_needs_horizon():
    with pytest.raises(ValueError):
        make_environment("changing_cliff", 10)
