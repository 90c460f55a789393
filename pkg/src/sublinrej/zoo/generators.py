"""Random and reference instances for each shape class.

Every generator returns a dense unnormalized vector (``out[x - 1] = p~(x)``),
except :func:`gen_tree` which returns a :class:`~sublinrej.oracle.TreePMF`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._validation import check_positive_int
from ..oracle import TreePMF

# exp(-700) is still a normal double, so log-space validation stays exact enough
_MAX_POTENTIAL = 700.0


def gen_harmonic(n: int) -> np.ndarray:
    n = check_positive_int(n, "N")
    return 1.0 / np.arange(1, n + 1)


def gen_cliff(n: int, n0: int) -> np.ndarray:
    n = check_positive_int(n, "N")
    n0 = check_positive_int(n0, "N0")
    if n0 > n:
        raise ValueError(f"cliff position N0={n0} exceeds N={n}")
    out = np.zeros(n)
    out[:n0] = 1.0
    return out


def gen_geometric(n: int, rho: float) -> np.ndarray:
    n = check_positive_int(n, "N")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    return np.power(rho, np.arange(n, dtype=np.float64))


def gen_monotone(n: int, seed=None) -> np.ndarray:
    """Lognormal weights sorted in decreasing order; the spread varies with the seed."""
    n = check_positive_int(n, "N")
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.25, 4.0)
    w = rng.lognormal(0.0, sigma, size=n)
    return np.sort(w)[::-1].copy()


def _potential_from_slopes(slopes):
    # V(1) = 0 and V(x + 1) - V(x) = slopes[x - 1]; evaluated piece by piece to limit rounding
    n = slopes.size + 1
    v = np.zeros(n)
    if n == 1:
        return v
    change = np.flatnonzero(np.diff(slopes)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [slopes.size]))
    base = 0.0
    for s, e in zip(starts, ends):
        k = np.arange(1, e - s + 1)
        v[s + 1:e + 1] = base + slopes[s] * k
        base = v[e]
    return v


def gen_logconcave(n: int, seed=None) -> np.ndarray:
    """``exp(-V)`` for a random convex, non-decreasing, piecewise-linear ``V`` with ``V(1) = 0``.

    Slopes span many scales so the halving point lands anywhere in ``[1, N]``;
    some seeds add a hard cutoff, which gives a cliff-like tail.
    """
    n = check_positive_int(n, "N")
    rng = np.random.default_rng(seed)
    pieces = int(rng.integers(1, 6))
    cuts = np.sort(rng.choice(np.arange(1, max(n - 1, 1) + 1), size=min(pieces - 1, max(n - 2, 0)),
                              replace=False)) if n > 2 else np.array([], dtype=int)
    rates = np.sort(10.0 ** rng.uniform(np.log10(0.1 / n), np.log10(2.0), size=cuts.size + 1))
    if rng.random() < 0.3:
        rates[0] = 0.0
    slopes = np.empty(max(n - 1, 0))
    bounds = np.concatenate(([0], cuts, [slopes.size]))
    for j in range(bounds.size - 1):
        slopes[bounds[j]:bounds[j + 1]] = rates[j]
    v = _potential_from_slopes(slopes)
    out = np.exp(-v)
    out[v > _MAX_POTENTIAL] = 0.0
    if n > 1 and rng.random() < 0.2:
        out[int(rng.integers(1, n)):] = 0.0
    return out


def gen_unimodal(n: int, seed=None) -> np.ndarray:
    """Strictly increasing up to a random mode, strictly decreasing after it."""
    n = check_positive_int(n, "N")
    rng = np.random.default_rng(seed)
    r = rng.random()
    mode = 1 if r < 0.1 else (n if r < 0.2 else int(rng.integers(1, n + 1)))
    v = np.zeros(n)
    for side in (-1, 1):
        length = mode - 1 if side < 0 else n - mode
        if length == 0:
            continue
        drop = 10.0 ** rng.uniform(-2.0, np.log10(600.0))
        steps = 0.5 + rng.random(length)
        steps *= drop / steps.sum()
        climb = np.cumsum(steps)
        if side < 0:
            v[:mode - 1] = climb[::-1]
        else:
            v[mode:] = climb
    return np.exp(-v)


def gen_tree(depth: int, seed=None) -> TreePMF:
    """Root mass 1; each vertex hands a Uniform(0, own mass) total to a random split of its children."""
    depth = check_positive_int(depth, "depth", minimum=0)
    rng = np.random.default_rng(seed)
    values = np.empty(2 ** (depth + 1) - 1)
    values[0] = 1.0
    for d in range(depth):
        parents = values[2 ** d - 1:2 ** (d + 1) - 1]
        total = parents * rng.random(parents.size)
        share = rng.random(parents.size)
        kids = np.empty(2 * parents.size)
        kids[0::2] = total * share
        kids[1::2] = total * (1.0 - share)
        values[2 ** (d + 1) - 1:2 ** (d + 2) - 1] = kids
    return TreePMF(depth, values)


def gen_tree_geometric(depth: int) -> TreePMF:
    """``p~(x) = 2^-|x|``: every parent equals the sum of its children."""
    depth = check_positive_int(depth, "depth", minimum=0)
    x = np.arange(1, 2 ** (depth + 1))
    return TreePMF(depth, np.ldexp(1.0, -(np.floor(np.log2(x)).astype(int))))


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for a reproducible instance: class tag, size (N, or depth for trees), seed."""

    class_tag: str
    size: int
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def generate(self):
        tag = self.class_tag
        if tag == "monotone":
            return gen_monotone(self.size, self.seed)
        if tag == "unimodal":
            return gen_unimodal(self.size, self.seed)
        if tag == "logconcave":
            return gen_logconcave(self.size, self.seed)
        if tag == "tree":
            return gen_tree(self.size, self.seed)
        if tag == "harmonic":
            return gen_harmonic(self.size)
        if tag == "cliff":
            return gen_cliff(self.size, self.params.get("n0", max(1, self.size // 3)))
        if tag == "geometric":
            return gen_geometric(self.size, self.params.get("rho", 0.5))
        raise ValueError(f"unknown instance class {tag!r}")
