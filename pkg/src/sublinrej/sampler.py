"""Rejection loops: exact draws from ``p`` given an envelope ``q~ >= p~``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from ._validation import check_positive_int, uniform_open
from .envelope import Envelope
from .oracle import QueryCountedPMF

DOMINANCE_RTOL = 1e-12


class DominanceViolationError(RuntimeError):
    """A trial saw ``p~(x) > q~(x)``: the envelope or the class assumption is wrong."""


class InvalidBoundError(ValueError):
    """The bound ``M`` passed to the classical sampler is below ``max p / q``."""


@dataclass(frozen=True)
class DrawResult:
    value: int
    trials: int


@dataclass
class BatchResult:
    values: np.ndarray
    trials: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __iter__(self) -> Iterator[DrawResult]:
        for v, t in zip(self.values.tolist(), self.trials.tolist()):
            yield DrawResult(v, t)

    @property
    def mean_trials(self) -> Optional[float]:
        return float(self.trials.mean()) if len(self) else None

    @property
    def query_total(self) -> int:
        return int(self.trials.sum())

    def summary(self) -> dict:
        return {"n": len(self), "mean_trials": self.mean_trials, "query_total": self.query_total}


def _dominance_error(x, px, qx):
    return DominanceViolationError(f"p~({x}) = {px!r} exceeds envelope q~({x}) = {qx!r}")


def rejection_sample(oracle: QueryCountedPMF, env: Envelope, rng) -> DrawResult:
    """Draw ``X ~ q`` and accept with probability ``p~(X) / q~(X)`` until accepted.

    Each trial costs exactly one oracle query; the trial count is geometric
    with mean ``Z_q / Z_p``.
    """
    trials = 0
    while True:
        trials += 1
        x = env.sample_proposal(rng)
        px = oracle.query(x)
        qx = env.density_at(x)
        if px > qx * (1.0 + DOMINANCE_RTOL):
            raise _dominance_error(x, px, qx)
        if uniform_open(rng) * qx <= px:
            return DrawResult(x, trials)


def sample_batch(oracle: QueryCountedPMF, env: Envelope, n: int, rng) -> BatchResult:
    """``n`` independent rejection draws, run as vectorized rounds of trials."""
    n = check_positive_int(n, "n", minimum=0)
    values = np.zeros(n, dtype=np.int64)
    trials = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    while pending.size:
        x, qx = env.draw_many(rng, pending.size)
        px = oracle.query_many(x)
        bad = px > qx * (1.0 + DOMINANCE_RTOL)
        if bad.any():
            k = int(np.argmax(bad))
            raise _dominance_error(int(x[k]), float(px[k]), float(qx[k]))
        u = rng.random(pending.size)
        while (zero := u == 0.0).any():
            u[zero] = rng.random(int(zero.sum()))
        accept = u * qx <= px
        trials[pending] += 1
        values[pending[accept]] = x[accept]
        pending = pending[~accept]
    return BatchResult(values, trials)


def _as_pmf(f):
    if callable(f):
        return f
    arr = np.asarray(f, dtype=np.float64)
    return lambda x: float(arr[x - 1])


def rejection_sample_classical(
    p,
    q,
    bound: float,
    rng,
    q_sampler: Callable | None = None,
) -> DrawResult:
    """Rejection with exact densities: accept ``X ~ q`` with probability ``p(X) / (M q(X))``.

    ``p`` and ``q`` are arrays (1-based: ``p[x - 1]``) or callables. When ``q``
    is a callable, ``q_sampler(rng)`` must draw from it.
    """
    if not bound >= 1.0:
        raise InvalidBoundError(f"M must be at least 1, got {bound}")
    p_at, q_at = _as_pmf(p), _as_pmf(q)
    if q_sampler is None:
        if callable(q):
            raise ValueError("q_sampler is required when q is a callable")
        cdf = np.cumsum(np.asarray(q, dtype=np.float64))

        def q_sampler(r):
            k = int(np.searchsorted(cdf, (1.0 - r.random()) * cdf[-1], side="left"))
            return min(k, cdf.size - 1) + 1

    trials = 0
    while True:
        trials += 1
        x = q_sampler(rng)
        ratio = p_at(x) / (bound * q_at(x))
        if ratio > 1.0 + DOMINANCE_RTOL:
            raise InvalidBoundError(f"p/(Mq) = {ratio} > 1 at x={x}: M is too small")
        if uniform_open(rng) <= ratio:
            return DrawResult(x, trials)

