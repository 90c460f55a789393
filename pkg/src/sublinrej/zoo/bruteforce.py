"""Full-scan ground truth. Test and verification use only.

These functions read every point of a dense instance and never touch a
query counter, so production code paths must not call them.
"""
from __future__ import annotations

import math

import numpy as np

from ..envelope import Envelope
from ..oracle import TreePMF
from .validators import Check

DOMINANCE_RTOL = 1e-12


def _dense(p):
    return p.values if isinstance(p, TreePMF) else np.asarray(p, dtype=np.float64)


def exact_mass(p) -> float:
    z = math.fsum(_dense(p).tolist())
    if not z > 0:
        raise ValueError("target has zero total mass")
    return z


def exact_ratio(env: Envelope, p) -> float:
    """``Z_q / Z_p`` by summing every point of both functions."""
    return math.fsum(env.dense().tolist()) / exact_mass(p)


def sup_density_ratio(env: Envelope, p) -> float:
    """``max_x p(x) / q(x)`` over the normalized distributions."""
    pd = _dense(p)
    qd = env.dense()
    zp, zq = exact_mass(pd), math.fsum(qd.tolist())
    live = pd > 0
    if np.any(qd[live] == 0):
        return math.inf
    return float(np.max(pd[live] / qd[live])) * zq / zp


def check_dominance(env: Envelope, p, rtol: float = DOMINANCE_RTOL) -> Check:
    pd = _dense(p)
    bad = np.flatnonzero(pd > env.dense() * (1.0 + rtol))
    return Check(True) if bad.size == 0 else Check(False, int(bad[0]) + 1)


def score_envelope(env: Envelope, p, rtol: float = DOMINANCE_RTOL) -> dict:
    """``exact_ratio``, ``sup_density_ratio`` and ``check_dominance`` from one scan of each side."""
    pd = _dense(p)
    qd = env.dense()
    zp, zq = exact_mass(pd), math.fsum(qd.tolist())
    live = pd > 0
    if np.any(qd[live] == 0):
        sup = math.inf
    else:
        sup = float(np.max(pd[live] / qd[live])) * zq / zp
    bad = np.flatnonzero(pd > qd * (1.0 + rtol))
    dom = Check(True) if bad.size == 0 else Check(False, int(bad[0]) + 1)
    return {"ratio": zq / zp, "sup_ratio": sup, "dominance": dom}


def exact_pmf(p) -> np.ndarray:
    pd = _dense(p)
    return pd / exact_mass(pd)
