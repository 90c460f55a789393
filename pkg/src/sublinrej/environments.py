"""Loss environments for the adversarial bandit experiments.

Arms are 1-based. An environment reports the loss of the arm actually played
(so the fast algorithm never pays O(K) per round) and, separately, the
expected loss of every arm for regret accounting.
"""
from __future__ import annotations

import bisect
import math

import numpy as np

from ._validation import check_positive_int


class LossRangeError(ValueError):
    """An environment produced a loss outside [0, 1]."""


def _check_fraction(z, name="fraction"):
    if not 0.0 < z <= 1.0:
        raise ValueError(f"{name} must lie in (0, 1], got {z}")
    return float(z)


def _zero_count(k, z):
    return max(1, int(math.floor(z * k + 0.5)))


class Environment:
    kind = "base"

    def __init__(self, n_arms: int):
        self.n_arms = check_positive_int(n_arms, "n_arms", minimum=2)

    def _loss(self, t, arm, rng) -> float:
        raise NotImplementedError

    def loss(self, t: int, arm: int, rng=None) -> float:
        """Loss of ``arm`` at round ``t`` (both 1-based)."""
        value = float(self._loss(t, arm, rng))
        if not 0.0 <= value <= 1.0:
            raise LossRangeError(f"{self.kind} produced loss {value} at t={t}, arm={arm}")
        return value

    def mean_losses(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def best_cumulative(self, horizon: int) -> np.ndarray:
        """``min_k sum_{s <= t} E loss_s(k)`` for ``t = 1..horizon``."""
        cum = np.zeros(self.n_arms)
        out = np.empty(horizon)
        for t in range(1, horizon + 1):
            cum += self.mean_losses(t)
            out[t - 1] = cum.min()
        return out

    def params(self) -> dict:
        return {"kind": self.kind, "n_arms": self.n_arms}


class FixedPartition(Environment):
    """A fixed set of arms always returns 0; all others always return 1."""

    kind = "fixed_partition"

    def __init__(self, n_arms, zero_fraction=0.1, seed=None):
        super().__init__(n_arms)
        self.zero_fraction = _check_fraction(zero_fraction, "zero_fraction")
        rng = np.random.default_rng(seed)
        self.zero_arms = np.sort(rng.choice(self.n_arms, _zero_count(self.n_arms, self.zero_fraction),
                                            replace=False)) + 1
        self._means = np.ones(self.n_arms)
        self._means[self.zero_arms - 1] = 0.0

    def _loss(self, t, arm, rng):
        return self._means[arm - 1]

    def mean_losses(self, t):
        return self._means

    def best_cumulative(self, horizon):
        return np.arange(1, horizon + 1) * self._means.min()

    def params(self):
        return {**super().params(), "zero_fraction": self.zero_fraction}


class ChangingCliff(Environment):
    """Like :class:`FixedPartition`, but the zero-loss set is redrawn at equally spaced change points.

    Rounds ``t > c`` for a change point ``c`` use the next set.
    """

    kind = "changing_cliff"

    def __init__(self, n_arms, horizon, zero_fraction=0.2, phases=5, seed=None):
        super().__init__(n_arms)
        self.horizon = check_positive_int(horizon, "horizon")
        self.phases = check_positive_int(phases, "phases")
        self.zero_fraction = _check_fraction(zero_fraction, "zero_fraction")
        rng = np.random.default_rng(seed)
        n_zero = _zero_count(self.n_arms, self.zero_fraction)
        self.change_points = [self.horizon * j // self.phases for j in range(1, self.phases)]
        self._means = np.ones((self.phases, self.n_arms))
        for ph in range(self.phases):
            self._means[ph, rng.choice(self.n_arms, n_zero, replace=False)] = 0.0

    def phase(self, t):
        return bisect.bisect_left(self.change_points, t)

    def _loss(self, t, arm, rng):
        return self._means[self.phase(t), arm - 1]

    def mean_losses(self, t):
        return self._means[self.phase(t)]

    def best_cumulative(self, horizon):
        out = np.empty(horizon)
        cum = np.zeros(self.n_arms)
        bounds = [0] + [c for c in self.change_points if c < horizon] + [horizon]
        for a, b in zip(bounds, bounds[1:]):
            steps = np.arange(1, b - a + 1)[:, None]
            block = cum[None, :] + steps * self._means[self.phase(a + 1)][None, :]
            out[a:b] = block.min(axis=1)
            cum = block[-1]
        return out

    def params(self):
        return {**super().params(), "horizon": self.horizon, "phases": self.phases,
                "zero_fraction": self.zero_fraction}


class StochasticSlope(Environment):
    """Arm ``k`` (0-based) returns i.i.d. ``max(k / K - 0.3 U, 0)`` with ``U ~ Uniform(0, 1)``."""

    kind = "stochastic_slope"

    def __init__(self, n_arms, seed=None):
        super().__init__(n_arms)
        a = np.arange(self.n_arms) / self.n_arms
        # E max(a - 0.3 U, 0) = a - 0.15 when a >= 0.3, else a^2 / 0.6
        self._means = np.where(a >= 0.3, a - 0.15, a * a / 0.6)

    def _loss(self, t, arm, rng):
        return max((arm - 1) / self.n_arms - 0.3 * rng.random(), 0.0)

    def mean_losses(self, t):
        return self._means

    def best_cumulative(self, horizon):
        return np.arange(1, horizon + 1) * self._means.min()


class CustomTable(Environment):
    """Deterministic losses from a table of shape ``(T, K)``, or ``(K,)`` for a fixed vector."""

    kind = "custom"

    def __init__(self, table):
        table = np.asarray(table, dtype=np.float64)
        if table.ndim == 1:
            table = table[None, :]
        if table.ndim != 2:
            raise ValueError("loss table must be 1-D or 2-D")
        if np.any(table < 0) or np.any(table > 1):
            raise LossRangeError("loss table entries must lie in [0, 1]")
        super().__init__(table.shape[1])
        self.table = table

    def _row(self, t):
        return self.table[min(t, self.table.shape[0]) - 1]

    def _loss(self, t, arm, rng):
        return self._row(t)[arm - 1]

    def mean_losses(self, t):
        return self._row(t)


ENVIRONMENTS = ("fixed_partition", "changing_cliff", "stochastic_slope", "custom")


def make_environment(kind: str, n_arms: int | None = None, horizon: int | None = None,
                     seed=None, **params) -> Environment:
    if kind == "fixed_partition":
        return FixedPartition(n_arms, params.get("zero_fraction", 0.1), seed=seed)
    if kind == "changing_cliff":
        if horizon is None:
            raise ValueError("changing_cliff needs the horizon to place its change points")
        return ChangingCliff(n_arms, horizon, params.get("zero_fraction", 0.2),
                             params.get("phases", 5), seed=seed)
    if kind == "stochastic_slope":
        return StochasticSlope(n_arms, seed=seed)
    if kind == "custom":
        return CustomTable(params["table"])
    raise ValueError(f"unknown environment {kind!r}; expected one of {ENVIRONMENTS}")
