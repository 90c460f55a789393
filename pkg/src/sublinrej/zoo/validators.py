"""Exact O(N) class-membership checks on dense instances."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..oracle import TreePMF

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Check:
    """Outcome of a validator; ``index`` is the first offending 1-based point."""

    ok: bool
    index: Optional[int] = None

    def __bool__(self):
        return self.ok


def _first(mask) -> Check:
    bad = np.flatnonzero(mask)
    return Check(True) if bad.size == 0 else Check(False, int(bad[0]))


def is_monotone(p) -> Check:
    p = np.asarray(p, dtype=np.float64)
    # mask[k] compares p(k + 2) with p(k + 1); report the later point
    c = _first(p[1:] > p[:-1])
    return c if c.ok else Check(False, c.index + 2)


def is_strictly_unimodal(p) -> Check:
    p = np.asarray(p, dtype=np.float64)
    if p.size == 1:
        return Check(True)
    d = np.diff(p)
    ties = np.flatnonzero(d == 0)
    if ties.size:
        return Check(False, int(ties[0]) + 2)
    falling = np.flatnonzero(d < 0)
    if falling.size == 0:
        return Check(True)
    rises_after = np.flatnonzero(d[falling[0]:] > 0)
    if rises_after.size:
        return Check(False, int(falling[0] + rises_after[0]) + 2)
    return Check(True)


def is_logconcave(p) -> Check:
    """``p(x)^2 >= p(x-1) p(x+1)`` with the mode at 1 and no interior zeros.

    The inequality is checked on logarithms with a ``1e-12`` relative slack,
    which absorbs rounding in exactly geometric stretches.
    """
    p = np.asarray(p, dtype=np.float64)
    if p[0] < p.max():
        return Check(False, int(np.argmax(p)) + 1)
    pos = p > 0
    support = int(np.argmin(pos)) if not pos.all() else p.size
    if pos[support:].any():
        return Check(False, support + int(np.argmax(pos[support:])) + 1)
    logp = np.log(p[:support])
    if logp.size < 3:
        return Check(True)
    gap = 2 * logp[1:-1] - logp[:-2] - logp[2:]
    slack = TIE_RTOL * np.maximum(1.0, np.abs(logp[1:-1]))
    c = _first(gap < -slack)
    return c if c.ok else Check(False, c.index + 2)


def is_tree_monotone(tree) -> Check:
    """Every internal vertex carries at least the total of its two children."""
    values = tree.values if isinstance(tree, TreePMF) else np.asarray(tree, dtype=np.float64)
    internal = (values.size - 1) // 2
    parent = values[:internal]
    kids = values[1:2 * internal + 1:2] + values[2:2 * internal + 2:2]
    return _first(kids > parent * (1.0 + TIE_RTOL))
