"""EXP3 and its rejection-sampling variant with O(log^2 K) work per round.

The fast variant never normalizes the exponential weights. It keeps the
cumulative loss estimates ``L`` in an :class:`~sublinrej.ostree.OrderStatMap`,
builds the dyadic monotone envelope over the weights in rank order (rank 1 =
smallest ``L`` = largest weight), draws the arm by rejection, and corrects
the importance weight with ``p~(J) / q(J)`` for an independent proposal draw
``J``, which keeps the loss estimate unbiased.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ._validation import check_positive_int
from .builders import build_monotone
from .environments import Environment
from .envelope import Envelope
from .oracle import QueryCountedPMF
from .ostree import OrderStatMap
from .sampler import rejection_sample

SCHEDULES = ("proposition", "experimental")


def step_size(schedule: Union[str, float], n_arms: int, t: int) -> float:
    """``eta_t`` for ``t >= 0``.

    ``"proposition"`` is ``0.5 * sqrt(log K / (K (t + 1)))``, the step size
    of the regret bound; ``"experimental"`` drops the factor 0.5; a number
    gives a constant step.
    """
    if isinstance(schedule, str):
        base = math.sqrt(math.log(n_arms) / (n_arms * (t + 1)))
        if schedule == "proposition":
            return 0.5 * base
        if schedule == "experimental":
            return base
        raise ValueError(f"unknown schedule {schedule!r}; expected {SCHEDULES} or a number")
    return float(schedule)


@dataclass(frozen=True)
class BanditConfig:
    n_arms: int
    horizon: int
    schedule: Union[str, float] = "experimental"
    m: int = 1
    seed: int = 0

    def __post_init__(self):
        check_positive_int(self.n_arms, "n_arms", minimum=2)
        check_positive_int(self.horizon, "horizon")
        check_positive_int(self.m, "m")
        if isinstance(self.schedule, str):
            step_size(self.schedule, self.n_arms, 0)
        elif not (float(self.schedule) > 0 and math.isfinite(float(self.schedule))):
            raise ValueError(f"constant step size must be positive, got {self.schedule}")

    def eta(self, t: int) -> float:
        return step_size(self.schedule, self.n_arms, t)

    def streams(self):
        """Independent generators for the player and for the environment's own noise."""
        play, noise = np.random.SeedSequence(self.seed).spawn(2)
        return np.random.default_rng(play), np.random.default_rng(noise)


@dataclass
class BanditRun:
    algo: str
    config: BanditConfig
    arms: np.ndarray
    losses: np.ndarray
    kth_calls: np.ndarray
    wall_ns: np.ndarray
    L: np.ndarray
    env: Optional[Environment] = None
    audit_ratios: Optional[np.ndarray] = None

    @property
    def cum_loss(self) -> np.ndarray:
        return np.cumsum(self.losses)

    def regret_curve(self, env: Environment | None = None) -> np.ndarray:
        env = env if env is not None else self.env
        return self.cum_loss - env.best_cumulative(self.losses.size)

    def trace_rows(self):
        """Rows ``(seed, t, arm, loss, cum_loss, kth_calls, wall_ns)``."""
        cum = self.cum_loss
        for t in range(self.losses.size):
            yield (self.config.seed, t + 1, int(self.arms[t]), float(self.losses[t]),
                   float(cum[t]), int(self.kth_calls[t]), int(self.wall_ns[t]))


def _new_trace(horizon):
    return (np.zeros(horizon, dtype=np.int64), np.zeros(horizon),
            np.zeros(horizon, dtype=np.int64), np.zeros(horizon, dtype=np.int64))


class Exp3Learner:
    """Plain EXP3 state: explicitly normalized exponential weights, Theta(K) per round."""

    algo = "exp3"

    def __init__(self, config: BanditConfig):
        self.config = config
        self.L = np.zeros(config.n_arms)
        self.t = 0
        self._w = np.empty(config.n_arms)
        self._cdf = np.empty(config.n_arms)
        self._argmin = 0

    def step(self, loss_of, rng) -> tuple[int, float]:
        """Play round ``t + 1``; ``loss_of(t, arm)`` reveals the chosen arm's loss."""
        self.t += 1
        L, w, cdf = self.L, self._w, self._cdf
        eta = self.config.eta(self.t - 1)
        # L only grows, so the minimum moves only when its own arm is updated
        np.multiply(L, -eta, out=w)
        np.add(w, eta * L[self._argmin], out=w)
        np.exp(w, out=w)
        np.cumsum(w, out=cdf)
        total = cdf[-1]
        i = min(int(cdf.searchsorted((1.0 - rng.random()) * total)), L.size - 1)
        loss = loss_of(self.t, i + 1)
        if loss:
            L[i] += loss * total / w[i]
            if i == self._argmin:
                self._argmin = int(L.argmin())
        return i + 1, loss

    @property
    def kth_calls(self):
        return 0


class RankSpaceRound:
    """One round of the fast algorithm: ``p~(rank) = exp(-eta (L_(rank) - L_min))``.

    Rank ``r`` maps to ``kth_largest(K + 1 - r)``. Lookups are cached for the
    round, so each distinct rank costs one ``kth_largest`` call.
    """

    def __init__(self, tree: OrderStatMap, eta: float):
        self.tree = tree
        self.n_arms = len(tree)
        self.eta = eta
        self._cache: dict[int, tuple[float, int]] = {}
        self._lmin = None
        self.oracle = QueryCountedPMF(self.weight, domain_size=self.n_arms)
        self.envelope: Envelope = build_monotone(self.oracle).envelope

    def lookup(self, rank: int) -> tuple[float, int]:
        hit = self._cache.get(rank)
        if hit is None:
            hit = self._cache[rank] = self.tree.kth_largest(self.n_arms + 1 - rank)
        return hit

    def weight(self, rank: int) -> float:
        if self._lmin is None:
            self._lmin = self.lookup(1)[0]
        return math.exp(-self.eta * (self.lookup(rank)[0] - self._lmin))

    def arm(self, rank: int) -> int:
        return self.lookup(rank)[1]

    def proposal_prob(self, rank: int) -> float:
        return self.envelope.density_at(rank) / self.envelope.total_mass

    def draw_arm(self, rng):
        """Rejection draw of an arm from the exact softmax; returns ``(arm, rank, trials)``."""
        draw = rejection_sample(self.oracle, self.envelope, rng)
        return self.arm(draw.value), draw.value, draw.trials

    def draw_proposals(self, rng, m: int) -> list[int]:
        return [self.envelope.sample_proposal(rng) for _ in range(m)]

    def ratio_factor(self, ranks: Sequence[int]) -> float:
        """``(1/m) sum p~(J_i) / q(J_i)``; its mean under ``q`` is ``Z_p``."""
        return math.fsum(self.weight(r) / self.proposal_prob(r) for r in ranks) / len(ranks)

    def dense_rank_weights(self) -> np.ndarray:
        """All weights in rank order by a full scan (audits and tests only)."""
        values = np.array([v for v, _ in self.tree])
        return np.exp(-self.eta * (values - values[0]))

    def sup_ratio(self) -> float:
        """``max p / q`` over all arms, by full scan."""
        p = self.dense_rank_weights()
        q = self.envelope.dense()
        return float(np.max(p / q) * math.fsum(q.tolist()) / math.fsum(p.tolist()))


def importance_factor(weight_played, loss, weights_j, probs_j):
    """``loss / p~(I) * mean_i p~(J_i) / q(J_i)``; broadcasts over leading axes."""
    ratio = np.mean(np.asarray(weights_j, dtype=np.float64) / np.asarray(probs_j, dtype=np.float64),
                    axis=-1)
    return np.asarray(loss, dtype=np.float64) / np.asarray(weight_played, dtype=np.float64) * ratio


def estimate_increment(state: RankSpaceRound, arm: int, loss: float, j_ranks: Sequence[int],
                       rank: int | None = None) -> np.ndarray:
    """The loss-estimate increment, a length-K vector supported on ``arm``."""
    if rank is None:
        rank = next(r for r, (_, a) in enumerate(state.tree, start=1) if a == arm)
    out = np.zeros(state.n_arms)
    if loss:
        out[arm - 1] = loss / state.weight(rank) * state.ratio_factor(j_ranks)
    return out


class FastExp3Learner:
    """Rejection-sampling EXP3 state: dense ``L`` plus its order-statistic map."""

    algo = "fast"

    def __init__(self, config: BanditConfig, audit: bool = False):
        self.config = config
        self.L = np.zeros(config.n_arms)
        self.tree = OrderStatMap(self.L)
        self.t = 0
        self.audit = audit
        self.last_round = None

    @property
    def kth_calls(self):
        return self.tree.kth_calls

    def step(self, loss_of, rng) -> tuple[int, float]:
        self.t += 1
        state = RankSpaceRound(self.tree, self.config.eta(self.t - 1))
        arm, rank, _ = state.draw_arm(rng)
        factor = state.ratio_factor(state.draw_proposals(rng, self.config.m))
        loss = loss_of(self.t, arm)
        if loss:
            old = self.L[arm - 1]
            self.L[arm - 1] = old + loss / state.weight(rank) * factor
            self.tree.update(arm, old, self.L[arm - 1])
        self.last_round = state
        return arm, loss


def _play(learner, env: Environment) -> BanditRun:
    config = learner.config
    if env.n_arms != config.n_arms:
        raise ValueError(f"config has {config.n_arms} arms, environment has {env.n_arms}")
    rng, noise = config.streams()
    T = config.horizon
    arms, losses, kth, wall = _new_trace(T)
    audit = getattr(learner, "audit", False)
    ratios = np.zeros(T) if audit else None

    def loss_of(t, arm):
        return env.loss(t, arm, noise)

    clock = time.perf_counter_ns
    for t in range(T):
        calls = learner.kth_calls
        start = clock()
        arms[t], losses[t] = learner.step(loss_of, rng)
        wall[t] = clock() - start
        kth[t] = learner.kth_calls - calls
        if audit:
            ratios[t] = learner.last_round.sup_ratio()
    return BanditRun(learner.algo, config, arms, losses, kth, wall, learner.L, env, ratios)


def exp3_run(config: BanditConfig, env: Environment) -> BanditRun:
    """EXP3 with the importance-weighted update ``L_I += loss / p(I)``."""
    return _play(Exp3Learner(config), env)


def fast_exp3_run(config: BanditConfig, env: Environment, audit: bool = False) -> BanditRun:
    """Rejection-sampling EXP3 with ``m`` proposal draws per round for the loss estimate.

    With ``audit=True`` every round also records ``max p / q`` by a full
    scan (O(K) extra work, excluded from ``wall_ns``), which must stay at or
    below 2.
    """
    return _play(FastExp3Learner(config, audit=audit), env)


def run_bandit(algo: str, config: BanditConfig, env: Environment, audit: bool = False) -> BanditRun:
    if algo == "exp3":
        return exp3_run(config, env)
    if algo == "fast":
        return fast_exp3_run(config, env, audit=audit)
    raise ValueError(f"unknown algorithm {algo!r}; expected 'exp3' or 'fast'")


def pseudo_regret(runs, env: Environment | None = None) -> float:
    """Mean over runs of the player's total loss minus the best arm's expected total."""
    if isinstance(runs, BanditRun):
        runs = [runs]
    totals = [float(r.losses.sum()) - float((env or r.env).best_cumulative(r.losses.size)[-1])
              for r in runs]
    return float(np.mean(totals))


@dataclass
class RegretCurve:
    t: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_seeds: int

    def rows(self):
        for t, mu, sd in zip(self.t.tolist(), self.mean.tolist(), self.std.tolist()):
            yield t, mu, sd, self.n_seeds


def regret_curve(runs: Sequence[BanditRun]) -> RegretCurve:
    """Mean and standard deviation across seeds, aggregated in seed order."""
    runs = sorted(runs, key=lambda r: r.config.seed)
    curves = np.vstack([r.regret_curve() for r in runs])
    std = curves.std(axis=0, ddof=1) if len(runs) > 1 else np.zeros(curves.shape[1])
    return RegretCurve(np.arange(1, curves.shape[1] + 1), curves.mean(axis=0), std, len(runs))
