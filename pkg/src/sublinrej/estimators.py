"""scikit-learn style wrappers around the envelope builders and the bandit loops.

These exist for callers that already compose sklearn objects (``get_params``,
``clone``, grid search over ``tree_offset`` or ``m``); the functional API in
:mod:`sublinrej.builders` and :mod:`sublinrej.bandit` is the primary one.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_rng, check_weights
from .bandit import BanditConfig, exp3_run, fast_exp3_run, pseudo_regret, step_size
from .builders import SHAPES, build_envelope
from .oracle import QueryCountedPMF, TreePMF
from .sampler import sample_batch


class EnvelopeSampler(BaseEstimator):
    """Builds a rejection envelope for a shape-constrained target and draws exact samples.

    Parameters
    ----------
    shape : {"monotone", "unimodal", "logconcave", "tree"}
    tree_offset : int
        Cutoff offset ``c`` for the tree builder; ignored for other shapes.
    random_state : None, int or numpy Generator
    """

    def __init__(self, shape="monotone", tree_offset=1, random_state=None):
        self.shape = shape
        self.tree_offset = tree_offset
        self.random_state = random_state

    def fit(self, X, y=None):
        """``X`` is a dense weight vector, a :class:`TreePMF` or a query-counted oracle."""
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if isinstance(X, QueryCountedPMF):
            oracle = X
        elif isinstance(X, TreePMF):
            oracle = QueryCountedPMF(X)
        else:
            oracle = QueryCountedPMF(check_weights(X, "X"))
        kwargs = {"offset": self.tree_offset} if self.shape == "tree" else {}
        self.oracle_ = oracle
        self.report_ = build_envelope(oracle, self.shape, **kwargs)
        self.envelope_ = self.report_.envelope
        self.n_queries_ = self.report_.queries_used
        self.domain_size_ = self.envelope_.domain_size
        self._rng = check_rng(self.random_state)
        return self

    def sample(self, n_samples=1):
        """Exact draws from the normalized target, 1-based."""
        check_is_fitted(self, "envelope_")
        batch = sample_batch(self.oracle_, self.envelope_, n_samples, self._rng)
        self.last_trials_ = batch.trials
        return batch.values

    def proposal_density(self, X):
        check_is_fitted(self, "envelope_")
        return np.array([self.envelope_.proposal_prob(int(x)) for x in np.ravel(X)])


class _BanditEstimator(BaseEstimator):
    _algo = None

    def _config(self, env):
        return BanditConfig(env.n_arms, self.horizon, self.schedule, getattr(self, "m", 1),
                            self.random_state)

    def _store(self, run):
        self.run_ = run
        self.cumulative_losses_ = run.L
        self.n_arms_ = run.L.size
        self.pseudo_regret_ = pseudo_regret(run)
        return self

    def predict_proba(self):
        """The arm distribution the learner would play next round."""
        check_is_fitted(self, "run_")
        eta = step_size(self.schedule, self.n_arms_, self.horizon)
        w = np.exp(-eta * (self.cumulative_losses_ - self.cumulative_losses_.min()))
        return w / w.sum()


class Exp3Bandit(_BanditEstimator):
    """Explicitly normalized EXP3; ``fit`` plays ``horizon`` rounds against an environment."""

    def __init__(self, horizon=1000, schedule="experimental", random_state=0):
        self.horizon = horizon
        self.schedule = schedule
        self.random_state = random_state

    def fit(self, env, y=None):
        return self._store(exp3_run(self._config(env), env))


class FastExp3Bandit(_BanditEstimator):
    """The rejection-sampling variant with ``m`` proposal draws per round."""

    def __init__(self, horizon=1000, schedule="experimental", m=1, audit=False, random_state=0):
        self.horizon = horizon
        self.schedule = schedule
        self.m = m
        self.audit = audit
        self.random_state = random_state

    def fit(self, env, y=None):
        return self._store(fast_exp3_run(self._config(env), env, audit=self.audit))
