import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from sublinrej.envelope import (
    ConstBlock,
    Envelope,
    EnvelopeDomainError,
    ExpTail,
    TreeBlock,
    density_at,
    sample_proposal,
    total_mass,
)


@pytest.fixture
def two_blocks():
    return Envelope([ConstBlock(1, 2, 8.0), ConstBlock(3, 4, 4.0)], 4)


class _FixedU:
    def __init__(self, u):
        self.u = u

    def random(self):
        return 1.0 - self.u


def test_density_lookup(two_blocks):
    assert density_at(two_blocks, 3) == 4.0
    assert two_blocks.density_at(1) == 8.0


def test_exp_tail_density():
    tail = ExpTail(2, 8, 0.5, math.log(2))
    assert tail.density(4) == pytest.approx(0.125)


def test_tree_block_density():
    b = TreeBlock(2, 1, 3, 0.125)
    env = Envelope([ConstBlock(1, 3, 1.0), TreeBlock(2, 1, 3, 0.125), TreeBlock(3, 1, 3, 0.25)], 15)
    assert env.density_at(4) == 0.125
    assert env.density_at(9) == 0.125
    assert env.density_at(13) == 0.25
    assert b.count == 6


def test_masses(two_blocks):
    assert total_mass(two_blocks) == 24.0
    assert Envelope([ConstBlock(1, 10, 0.3)]).total_mass == pytest.approx(3.0)
    tail = Envelope([ExpTail(1, 3, 1.0, math.log(2))])
    assert tail.total_mass == pytest.approx(1.75)


def test_uniform_inverse_cdf():
    env = Envelope([ConstBlock(1, 4, 2.0)])
    assert sample_proposal(env, _FixedU(0.30)) == 2
    assert env.inverse_cdf(0.30) == 2


def test_two_block_inverse_cdf(two_blocks):
    assert two_blocks.inverse_cdf(0.90) == 4


def test_boundary_tie_goes_to_lower_segment(two_blocks):
    # u * Z = 16 exactly is the end of the first segment
    assert two_blocks.inverse_cdf(16 / 24) == 2
    assert two_blocks.inverse_cdf(1.0) == 4


def test_overlap_and_coverage_rejected():
    with pytest.raises(ValueError):
        Envelope([ConstBlock(1, 3, 1.0), ConstBlock(3, 4, 1.0)])
    with pytest.raises(ValueError):
        Envelope([ConstBlock(1, 3, 1.0)], domain_size=4)
    with pytest.raises(ValueError):
        Envelope([ConstBlock(1, 3, 0.0)])


def test_uncovered_point():
    env = Envelope([ConstBlock(1, 3, 1.0)])
    with pytest.raises(EnvelopeDomainError):
        env.density_at(4)


def test_bad_segments():
    with pytest.raises(ValueError):
        ExpTail(1, 3, 1.0, 0.0)
    with pytest.raises(ValueError):
        TreeBlock(3, 2, 4, 1.0)
    with pytest.raises(ValueError):
        ConstBlock(2, 1, 1.0)


def test_empirical_law(two_blocks, rng):
    xs = two_blocks.sample(10 ** 6, rng)
    freq = np.bincount(xs, minlength=5)[1:] / xs.size
    expect = np.array([1 / 3, 1 / 3, 1 / 6, 1 / 6])
    se = np.sqrt(expect * (1 - expect) / xs.size)
    assert np.all(np.abs(freq - expect) <= 3 * se)


def _mixed_envelope():
    return Envelope([ConstBlock(1, 1, 2.0), ConstBlock(2, 3, 1.5), ExpTail(4, 40, 1.2, 0.15),
                     ConstBlock(41, 50, 0.0)], 50)


def test_mass_matches_full_scan():
    env = _mixed_envelope()
    assert env.total_mass == pytest.approx(math.fsum(env.dense().tolist()), rel=1e-9)


def test_chi_square_against_analytic_q(rng):
    env = _mixed_envelope()
    q = env.dense() / env.total_mass
    x, _ = env.draw_many(rng, 10 ** 6)
    counts = np.bincount(x, minlength=51)[1:]
    live = q > 0
    assert counts[~live].sum() == 0
    _, p = stats.chisquare(counts[live], q[live] * x.size)
    assert p > 1e-3


def test_tree_block_law(rng):
    env = Envelope([ConstBlock(1, 3, 1.0), TreeBlock(2, 1, 3, 0.5), TreeBlock(3, 1, 3, 0.25)], 15)
    q = env.dense() / env.total_mass
    x, qt = env.draw_many(rng, 200_000)
    np.testing.assert_allclose(qt, env.dense()[x - 1])
    counts = np.bincount(x, minlength=16)[1:]
    _, p = stats.chisquare(counts, q * x.size)
    assert p > 1e-3


def test_scalar_and_vector_inverse_cdf_agree():
    env = Envelope([ConstBlock(1, 3, 1.0), TreeBlock(2, 1, 3, 0.5), TreeBlock(3, 1, 3, 0.25)], 15)
    env2 = _mixed_envelope()
    u = np.linspace(1e-9, 1.0, 997)
    for e in (env, env2):
        xs, _ = e._inverse_cdf_many(u)
        assert [e.inverse_cdf(float(v)) for v in u] == xs.tolist()


def test_json_roundtrip():
    env = Envelope([ConstBlock(1, 3, 1.0), TreeBlock(2, 1, 3, 0.5), TreeBlock(3, 1, 3, 0.25)], 15)
    back = Envelope.from_json(env.to_json())
    np.testing.assert_array_equal(back.dense(), env.dense())
    env2 = _mixed_envelope()
    assert Envelope.from_dict(env2.to_dict()).total_mass == env2.total_mass
    assert env2.to_dict()["segments"][2]["lambda"] == 0.15


def test_scaled():
    env = _mixed_envelope()
    np.testing.assert_allclose(env.scaled(3.0).dense(), 3.0 * env.dense())


@given(st.integers(1, 60), st.floats(0.01, 3.0), st.floats(0.0, 1.0, exclude_min=True))
def test_exp_tail_locate_in_range(n, decay, w):
    tail = ExpTail(5, 4 + n, 1.0, decay)
    x = tail.locate(w)
    assert 5 <= x <= 4 + n


@given(st.lists(st.tuples(st.integers(1, 6), st.floats(0.0, 10.0)), min_size=1, max_size=8)
       .filter(lambda segs: any(h > 0 for _, h in segs)),
       st.floats(0.0, 1.0, exclude_min=True))
def test_inverse_cdf_lands_on_positive_density(segs, u):
    blocks, lo = [], 1
    for count, h in segs:
        blocks.append(ConstBlock(lo, lo + count - 1, h))
        lo += count
    env = Envelope(blocks)
    assert env.density_at(env.inverse_cdf(u)) > 0


def test_steep_tail_top_of_range():
    tail = ExpTail(5, 17, 1.0, 3.0)
    assert tail.locate(1.0) == 17
    env = Envelope([tail])
    xs, _ = env._inverse_cdf_many(np.array([1.0, 0.5]))
    assert xs.tolist() == [env.inverse_cdf(1.0), env.inverse_cdf(0.5)]
