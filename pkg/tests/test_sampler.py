import numpy as np
import pytest
from scipy import stats

from sublinrej.builders import build_logconcave, build_monotone
from sublinrej.envelope import ConstBlock, Envelope, ExpTail
from sublinrej.oracle import QueryCountedPMF
from sublinrej.sampler import (
    DominanceViolationError,
    InvalidBoundError,
    rejection_sample,
    rejection_sample_classical,
    sample_batch,
)
from sublinrej.zoo import exact_pmf, gen_geometric


def test_exact_envelope_always_accepts(rng):
    p = [4.0, 3.0, 3.0, 1.0]
    env = Envelope([ConstBlock(i + 1, i + 1, v) for i, v in enumerate(p)])
    o = QueryCountedPMF(p)
    assert all(rejection_sample(o, env, rng).trials == 1 for _ in range(500))
    assert o.query_count == 500


def test_ratio_16_mean_trials(rng):
    o = QueryCountedPMF([8.0, 4.0, 2.0, 1.0])
    env = build_monotone(o).envelope
    batch = sample_batch(o, env, 10 ** 5, rng)
    assert batch.mean_trials == pytest.approx(1.6, abs=0.02)
    assert batch.query_total == int(batch.trials.sum())


def test_scalar_loop_mean_trials(rng):
    o = QueryCountedPMF([8.0, 4.0, 2.0, 1.0])
    env = build_monotone(o).envelope
    o.reset_count()
    draws = [rejection_sample(o, env, rng) for _ in range(20000)]
    trials = np.array([d.trials for d in draws])
    assert trials.mean() == pytest.approx(1.6, abs=0.04)
    assert o.query_count == trials.sum()


def test_empirical_law_chi_square(rng):
    p = np.array([8.0, 4.0, 2.0, 1.0])
    o = QueryCountedPMF(p)
    env = build_monotone(o).envelope
    xs = sample_batch(o, env, 10 ** 6, rng).values
    counts = np.bincount(xs, minlength=5)[1:]
    _, pval = stats.chisquare(counts, exact_pmf(p) * xs.size)
    assert pval > 1e-3


def test_empty_batch(rng):
    o = QueryCountedPMF([1.0])
    batch = sample_batch(o, build_monotone(o).envelope, 0, rng)
    assert len(batch) == 0 and batch.mean_trials is None
    assert batch.summary() == {"n": 0, "mean_trials": None, "query_total": 0}


def test_batch_iterates_draw_results(rng):
    o = QueryCountedPMF([2.0, 1.0])
    batch = sample_batch(o, build_monotone(o).envelope, 5, rng)
    assert [d.value for d in batch] == batch.values.tolist()


def test_dominance_violation_detected(rng):
    p = gen_geometric(64, 0.5)
    o = QueryCountedPMF(p)
    env = build_logconcave(o).envelope
    bad = Envelope([ExpTail(s.start, s.end, s.height, 2 * s.decay) if isinstance(s, ExpTail) else s
                    for s in env.segments])
    with pytest.raises(DominanceViolationError):
        for _ in range(5000):
            rejection_sample(o, bad, rng)
    with pytest.raises(DominanceViolationError):
        sample_batch(o, bad, 5000, rng)


def test_classical_identical(rng):
    p = np.array([0.1, 0.2, 0.7])
    assert all(rejection_sample_classical(p, p, 1.0, rng).trials == 1 for _ in range(300))


def test_classical_tight_bound(rng):
    p, q = np.array([0.5, 0.5]), np.array([0.25, 0.75])
    trials = [rejection_sample_classical(p, q, 2.0, rng).trials for _ in range(10 ** 5)]
    assert np.mean(trials) == pytest.approx(2.0, abs=0.05)


def test_classical_uniform_output(rng):
    u = np.full(4, 0.25)
    xs = [rejection_sample_classical(u, u, 1.0, rng).value for _ in range(40000)]
    _, pval = stats.chisquare(np.bincount(xs, minlength=5)[1:])
    assert pval > 1e-3


def test_classical_invalid_bound(rng):
    with pytest.raises(InvalidBoundError):
        for _ in range(200):
            rejection_sample_classical([0.9, 0.1], [0.5, 0.5], 1.0, rng)


def test_classical_callables(rng):
    p = lambda x: [0.5, 0.5][x - 1]
    q = lambda x: [0.25, 0.75][x - 1]
    draw = rejection_sample_classical(p, q, 2.0, rng, q_sampler=lambda r: 1 if r.random() < 0.25 else 2)
    assert draw.value in (1, 2)
