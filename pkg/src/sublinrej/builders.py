"""Envelope construction from a logarithmic (or N/log N) number of queries.

Each builder only touches the oracle through :meth:`QueryCountedPMF.query`,
so ``BuildReport.queries_used`` is the true cost. Values are memoized within
a single build; a point is never paid for twice.

None of the builders check that the target really belongs to its class: the
query model offers no cheap certificate. Use :mod:`sublinrej.zoo` validators
on dense instances when that matters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .envelope import ConstBlock, Envelope, ExpTail, TreeBlock
from .oracle import QueryCountedPMF

SHAPES = ("monotone", "unimodal", "logconcave", "tree")


class ClassViolationError(ValueError):
    """The oracle answered in a way no member of the assumed class could."""


@dataclass
class BuildReport:
    envelope: Envelope
    queries_used: int
    class_tag: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = self.envelope.to_dict()
        doc.update(class_tag=self.class_tag, queries_used=self.queries_used,
                   diagnostics=self.diagnostics)
        return doc


class _Probe:
    """Memoizing view of an oracle; points past ``N`` read as zero for free."""

    def __init__(self, oracle: QueryCountedPMF):
        self.oracle = oracle
        self.n = oracle.domain_size
        self.cache: dict[int, float] = {}
        self._start = oracle.query_count

    def __call__(self, x: int) -> float:
        if x > self.n:
            return 0.0
        v = self.cache.get(x)
        if v is None:
            v = self.cache[x] = self.oracle.query(x)
        return v

    @property
    def used(self) -> int:
        return self.oracle.query_count - self._start


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def _dyadic_blocks(value, n):
    """Dyadic step envelope of a non-increasing sequence ``value(1..n)``.

    Returns ``(lo, hi, height)`` triples in offset coordinates: the first
    block ``[1, 2]`` carries ``value(1)`` and block ``(2^i, 2^(i+1)]`` carries
    ``value(2^i)``, clipped to ``n``.
    """
    if n == 1:
        return [(1, 1, value(1))]
    blocks = [(1, 2, value(1))]
    step = 2
    while step < n:
        blocks.append((step + 1, min(2 * step, n), value(step)))
        step *= 2
    return blocks


def build_monotone(oracle: QueryCountedPMF) -> BuildReport:
    """Step envelope from the values at ``1, 2, 4, ..., 2^(ceil(log2 N) - 1)``."""
    probe = _Probe(oracle)
    blocks = [ConstBlock(lo, hi, h) for lo, hi, h in _dyadic_blocks(probe, probe.n)]
    env = Envelope(blocks, probe.n)
    return BuildReport(env, probe.used, "monotone", {"probes": sorted(probe.cache)})


def _find_mode(probe: _Probe) -> int:
    lo, hi = 1, probe.n
    while lo < hi:
        mid = (lo + hi) // 2
        a, b = probe(mid), probe(mid + 1)
        if a == b:
            raise ClassViolationError(
                f"p~({mid}) == p~({mid + 1}) = {a}: target is not strictly unimodal")
        if a < b:
            lo = mid + 1
        else:
            hi = mid
    return lo


def find_mode(oracle: QueryCountedPMF) -> int:
    """Binary search for the argmax of a strictly unimodal target."""
    return _find_mode(_Probe(oracle))


def build_unimodal(oracle: QueryCountedPMF) -> BuildReport:
    """Locate the mode, then run the dyadic construction outward on each side.

    The mode belongs to the right-hand (decreasing) side; the left side
    covers ``[1, m - 1]`` with heights read at ``m - 2^i``.
    """
    probe = _Probe(oracle)
    m = _find_mode(probe)
    segs = []
    if m > 1:
        for lo, hi, h in _dyadic_blocks(lambda y: probe(m - y), m - 1):
            segs.append(ConstBlock(m - hi, m - lo, h))
    for lo, hi, h in _dyadic_blocks(lambda y: probe(m - 1 + y), probe.n - m + 1):
        segs.append(ConstBlock(m - 1 + lo, m - 1 + hi, h))
    env = Envelope(segs, probe.n)
    return BuildReport(env, probe.used, "unimodal", {"mode": m})


def build_logconcave(oracle: QueryCountedPMF) -> BuildReport:
    """Flat top up to the first dyadic point where mass halves, geometric tail after.

    The target must be log-concave with its mode at 1. Binary search runs
    over the exponents ``i = 1..ceil(log2 N)``, so the cost is
    ``O(log log N)`` queries.
    """
    probe = _Probe(oracle)
    n = probe.n
    top = probe(1)
    k = _ceil_log2(n)

    lo, hi = 1, k + 1
    while lo < hi:
        mid = (lo + hi) // 2
        if probe(2 ** mid) <= top / 2:
            hi = mid
        else:
            lo = mid + 1

    diag = {"i0": None, "x0": None, "lambda": None}
    x0 = 2 ** lo
    if lo > k or x0 > n:
        # no halving point inside [N]: a flat envelope is within a factor 4
        segs = [ConstBlock(1, n, top)]
        if lo <= k:
            diag.update(i0=lo, x0=x0)
    else:
        tail_height = probe(x0)
        segs = [ConstBlock(1, x0 - 1, top)]
        diag.update(i0=lo, x0=x0)
        if tail_height == 0.0:
            # log-concave support is an interval containing 1, so p~ vanishes past x0
            segs.append(ConstBlock(x0, n, 0.0))
        else:
            decay = math.log(top / tail_height) / (x0 - 1)
            segs.append(ExpTail(x0, n, tail_height, decay))
            diag["lambda"] = decay
    env = Envelope(segs, n)
    return BuildReport(env, probe.used, "logconcave", diag)


def tree_cutoff_depth(depth: int, offset: int = 1) -> int:
    """Deepest level that gets queried: ``min(l, l - floor(log2 l) + offset)``."""
    if depth == 0:
        return 0
    return max(0, min(depth, depth - (depth.bit_length() - 1) + offset))


def tree_ratio_bound(depth: int, offset: int = 1) -> float:
    """Worst-case ``Z_q / Z_p`` of the tree envelope for a tree-monotone target."""
    cut = tree_cutoff_depth(depth, offset)
    return 1.0 + (2 ** (depth - cut + 1) - 2) / (cut + 1)


def build_tree_monotone(oracle: QueryCountedPMF, offset: int = 1) -> BuildReport:
    """Exact envelope down to the cutoff depth, one flat block per cutoff vertex below it."""
    n = oracle.domain_size
    depth = (n + 1).bit_length() - 2
    if 2 ** (depth + 1) - 1 != n:
        raise ValueError(f"domain size {n} is not a complete binary tree")
    cut = tree_cutoff_depth(depth, offset)
    start = oracle.query_count
    top = 2 ** (cut + 1) - 1
    values = oracle.query_many(range(1, top + 1)).tolist()
    segs = [ConstBlock(x, x, values[x - 1]) for x in range(1, top + 1)]
    if cut < depth:
        segs.extend(TreeBlock(y, cut, depth, values[y - 1]) for y in range(2 ** cut, top + 1))
    env = Envelope(segs, n)
    return BuildReport(env, oracle.query_count - start, "tree",
                       {"depth": depth, "l0": cut, "offset": offset})


def build_envelope(oracle: QueryCountedPMF, shape: str, **kwargs) -> BuildReport:
    try:
        builder = {
            "monotone": build_monotone,
            "unimodal": build_unimodal,
            "logconcave": build_logconcave,
            "tree": build_tree_monotone,
        }[shape]
    except KeyError:
        raise ValueError(f"unknown shape {shape!r}; expected one of {SHAPES}") from None
    return builder(oracle, **kwargs)
