"""Piecewise upper envelopes with closed-form masses and exact proposal sampling.

An :class:`Envelope` is an immutable list of disjoint segments covering the
domain. Each segment knows its own mass, so the normalizing constant of the
proposal is exact, and each can invert its within-segment CDF in O(1).
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from ._validation import check_rng


class EnvelopeDomainError(IndexError):
    """Raised when a point is not covered by any segment."""


def _ceil_index(w, count):
    # smallest k in [0, count) with (k + 1) / count >= w; exact ties go to the lower index
    k = math.ceil(w * count) - 1
    return min(max(k, 0), count - 1)


@dataclass(frozen=True)
class ConstBlock:
    """``q~(x) = height`` for ``lo <= x <= hi``."""

    lo: int
    hi: int
    height: float

    kind = "const"

    def __post_init__(self):
        if self.lo > self.hi or self.lo < 1:
            raise ValueError(f"bad block bounds [{self.lo}, {self.hi}]")
        if not (self.height >= 0 and math.isfinite(self.height)):
            raise ValueError(f"height must be finite and nonnegative, got {self.height}")

    @property
    def count(self) -> int:
        return self.hi - self.lo + 1

    @property
    def mass(self) -> float:
        return self.count * self.height

    def contains(self, x: int) -> bool:
        return self.lo <= x <= self.hi

    def density(self, x: int) -> float:
        return self.height

    def locate(self, w: float) -> int:
        return self.lo + _ceil_index(w, self.count)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi,
                "height": self.height, "mass": self.mass}


@dataclass(frozen=True)
class ExpTail:
    """``q~(x) = height * exp(-decay * (x - start))`` for ``start <= x <= end``."""

    start: int
    end: int
    height: float
    decay: float

    kind = "exp"

    def __post_init__(self):
        if self.start > self.end or self.start < 1:
            raise ValueError(f"bad tail bounds [{self.start}, {self.end}]")
        if not (self.height > 0 and math.isfinite(self.height)):
            raise ValueError(f"tail height must be positive and finite, got {self.height}")
        if not (self.decay > 0 and math.isfinite(self.decay)):
            raise ValueError(f"decay must be positive and finite, got {self.decay}")

    @property
    def lo(self) -> int:
        return self.start

    @property
    def hi(self) -> int:
        return self.end

    @property
    def count(self) -> int:
        return self.end - self.start + 1

    @property
    def mass(self) -> float:
        # h * (1 - r^n) / (1 - r) with r = exp(-decay)
        return self.height * math.expm1(-self.decay * self.count) / math.expm1(-self.decay)

    def contains(self, x: int) -> bool:
        return self.start <= x <= self.end

    def density(self, x: int) -> float:
        return self.height * math.exp(-self.decay * (x - self.start))

    def locate(self, w: float) -> int:
        # truncated geometric on z = x - start with success probability 1 - exp(-decay)
        t = w * -math.expm1(-self.decay * self.count)
        if t >= 1.0:
            # only reachable when the tail mass rounds to its infinite-tail limit
            return self.end
        z = math.ceil(math.log1p(-t) / -self.decay) - 1
        return self.start + min(max(z, 0), self.count - 1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "start": self.start, "end": self.end,
                "height": self.height, "lambda": self.decay, "mass": self.mass}


@dataclass(frozen=True)
class TreeBlock:
    """Constant height over the strict descendants of ``block_root`` down to ``depth_hi``.

    Vertices are heap indices; ``depth_lo`` is the depth of ``block_root`` and
    the block covers every descendant ``x`` with ``depth_lo < |x| <= depth_hi``.
    """

    block_root: int
    depth_lo: int
    depth_hi: int
    height: float

    kind = "tree"

    def __post_init__(self):
        if self.block_root < 1 or self.block_root.bit_length() - 1 != self.depth_lo:
            raise ValueError(f"vertex {self.block_root} is not at depth {self.depth_lo}")
        if self.depth_hi <= self.depth_lo:
            raise ValueError("a tree block needs depth_hi > depth_lo")
        if not (self.height >= 0 and math.isfinite(self.height)):
            raise ValueError(f"height must be finite and nonnegative, got {self.height}")

    @property
    def count(self) -> int:
        return 2 ** (self.depth_hi - self.depth_lo + 1) - 2

    @property
    def mass(self) -> float:
        return self.count * self.height

    def contains(self, x: int) -> bool:
        rel = x.bit_length() - 1 - self.depth_lo
        return 0 < rel <= self.depth_hi - self.depth_lo and x >> rel == self.block_root

    def density(self, x: int) -> float:
        return self.height

    def locate(self, w: float) -> int:
        offset = _ceil_index(w, self.count)
        rel = (offset + 2).bit_length() - 1
        return (self.block_root << rel) + offset + 2 - (1 << rel)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "block_root": self.block_root,
                "depth_lo": self.depth_lo, "depth_hi": self.depth_hi,
                "count": self.count, "height": self.height, "mass": self.mass}


Segment = Union[ConstBlock, ExpTail, TreeBlock]


class Envelope:
    """Immutable upper envelope ``q~`` made of disjoint segments.

    Parameters
    ----------
    segments : iterable of ConstBlock, ExpTail or TreeBlock
        Their union must be the whole domain. Interval segments are kept in
        index order; tree blocks follow in the order given.
    domain_size : int, optional
        When given, the segment counts must add up to it.
    """

    def __init__(self, segments: Iterable[Segment], domain_size: int | None = None):
        segments = list(segments)
        if not segments:
            raise ValueError("an envelope needs at least one segment")
        intervals = sorted((s for s in segments if not isinstance(s, TreeBlock)), key=lambda s: s.lo)
        blocks = [s for s in segments if isinstance(s, TreeBlock)]
        for a, b in zip(intervals, intervals[1:]):
            if a.hi >= b.lo:
                raise ValueError(f"segments overlap: {a} and {b}")
        self.segments = tuple(intervals + blocks)
        self._los = [s.lo for s in intervals]
        self._intervals = intervals
        self._blocks = {b.block_root: b for b in blocks}
        if len(self._blocks) != len(blocks):
            raise ValueError("two tree blocks share a root")

        masses = [s.mass for s in self.segments]
        if not all(math.isfinite(m) for m in masses):
            raise ValueError("segment masses must be finite")
        self.masses = np.array(masses)
        self.cumulative_masses = np.cumsum(self.masses)
        self._cum = self.cumulative_masses.tolist()
        self._total = math.fsum(masses)
        if not self._total > 0:
            raise ValueError("envelope total mass must be positive")

        covered = sum(s.count for s in self.segments)
        if domain_size is not None and covered != domain_size:
            raise ValueError(f"segments cover {covered} points, domain has {domain_size}")
        self.domain_size = covered
        self._arrays = None

    def __repr__(self):
        return f"Envelope({len(self.segments)} segments, N={self.domain_size}, Z={self._total:.6g})"

    def __len__(self):
        return len(self.segments)

    @property
    def total_mass(self) -> float:
        return self._total

    def segment_of(self, x: int) -> Segment:
        x = int(x)
        i = bisect.bisect_right(self._los, x) - 1
        if i >= 0 and self._intervals[i].contains(x):
            return self._intervals[i]
        if self._blocks:
            depth = x.bit_length() - 1
            for rel in range(1, depth + 1):
                block = self._blocks.get(x >> rel)
                if block is not None and block.contains(x):
                    return block
        raise EnvelopeDomainError(f"index {x} is not covered by the envelope")

    def density_at(self, x: int) -> float:
        """Unnormalized envelope height ``q~(x)``; divide by ``total_mass`` for ``q(x)``."""
        return self.segment_of(x).density(int(x))

    def proposal_prob(self, x: int) -> float:
        return self.density_at(x) / self._total

    def inverse_cdf(self, u: float) -> int:
        """Map ``u`` in (0, 1] to the point of ``q`` it selects."""
        v = u * self._total
        j = bisect.bisect_left(self._cum, v)
        if j >= len(self._cum):
            j = bisect.bisect_left(self._cum, self._cum[-1])
        prev = self._cum[j - 1] if j else 0.0
        seg = self.segments[j]
        w = (v - prev) / seg.mass
        return seg.locate(min(max(w, 0.0), 1.0))

    def sample_proposal(self, rng) -> int:
        """One exact draw from ``q = q~ / Z_q``."""
        return self.inverse_cdf(1.0 - rng.random())

    def sample(self, size, random_state=None) -> np.ndarray:
        """Vectorized draws from ``q``."""
        rng = check_rng(random_state)
        u = 1.0 - rng.random(size)
        return self._inverse_cdf_many(u)[0]

    def draw_many(self, rng, size):
        """Vectorized draws from ``q`` together with ``q~`` at each draw."""
        x, j = self._inverse_cdf_many(1.0 - rng.random(size))
        kinds, lo, _, decay, heights = self._segment_arrays()
        dens = heights[j]
        tail = kinds[j] == 1
        if tail.any():
            jt = j[tail]
            dens[tail] = dens[tail] * np.exp(-decay[jt] * (x[tail] - lo[jt]))
        return x, dens

    def _segment_arrays(self):
        if self._arrays is None:
            kinds = np.array([{"const": 0, "exp": 1, "tree": 2}[s.kind] for s in self.segments])
            lo = np.array([getattr(s, "lo", 0) if s.kind != "tree" else s.block_root for s in self.segments],
                          dtype=np.int64)
            count = np.array([s.count for s in self.segments], dtype=np.int64)
            decay = np.array([getattr(s, "decay", 0.0) for s in self.segments])
            heights = np.array([s.height for s in self.segments])
            self._arrays = (kinds, lo, count, decay, heights)
        return self._arrays

    def _inverse_cdf_many(self, u: np.ndarray) -> np.ndarray:
        kinds, lo, count, decay, _ = self._segment_arrays()
        v = u * self._total
        cum = self.cumulative_masses
        j = np.searchsorted(cum, v, side="left")
        last = int(np.searchsorted(cum, cum[-1], side="left"))
        j = np.minimum(j, last)
        prev = np.where(j > 0, cum[np.maximum(j - 1, 0)], 0.0)
        w = np.clip((v - prev) / self.masses[j], 0.0, 1.0)
        k, c, base = kinds[j], count[j], lo[j]
        out = np.empty(u.shape, dtype=np.int64)

        flat = k != 1
        idx = np.clip(np.ceil(w * c).astype(np.int64) - 1, 0, c - 1)
        const = k == 0
        out[const] = base[const] + idx[const]

        tail = ~flat
        if tail.any():
            lam, n = decay[j][tail], c[tail]
            t = np.minimum(w[tail] * -np.expm1(-lam * n), 1.0)
            with np.errstate(divide="ignore"):
                z = np.ceil(np.log1p(-t) / -lam)
            z = np.where(t >= 1.0, n, z).astype(np.int64) - 1
            out[tail] = base[tail] + np.clip(z, 0, n - 1)

        tree = k == 2
        if tree.any():
            off = idx[tree] + 2
            rel = np.floor(np.log2(off)).astype(np.int64)
            # guard against log2 rounding at exact powers of two
            rel = np.where((1 << (rel + 1)) <= off, rel + 1, rel)
            rel = np.where((1 << rel) > off, rel - 1, rel)
            out[tree] = (base[tree] << rel) + off - (1 << rel)
        return out, j

    def dense(self) -> np.ndarray:
        """Full-scan ``q~`` over ``1..N`` (index ``x`` at position ``x - 1``)."""
        out = np.zeros(self.domain_size)
        for s in self.segments:
            if s.kind == "const":
                out[s.lo - 1:s.hi] = s.height
            elif s.kind == "exp":
                out[s.start - 1:s.end] = s.height * np.exp(-s.decay * np.arange(s.count))
            else:
                for rel in range(1, s.depth_hi - s.depth_lo + 1):
                    first = s.block_root << rel
                    out[first - 1:first - 1 + (1 << rel)] = s.height
        return out

    def scaled(self, c: float) -> "Envelope":
        """The envelope of ``c * p~``: every height multiplied by ``c``."""
        out = []
        for s in self.segments:
            if s.kind == "const":
                out.append(ConstBlock(s.lo, s.hi, s.height * c))
            elif s.kind == "exp":
                out.append(ExpTail(s.start, s.end, s.height * c, s.decay))
            else:
                out.append(TreeBlock(s.block_root, s.depth_lo, s.depth_hi, s.height * c))
        return Envelope(out, self.domain_size)

    def to_dict(self) -> dict:
        return {
            "domain_size": self.domain_size,
            "total_mass": self._total,
            "segments": [s.to_dict() for s in self.segments],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "Envelope":
        segs = []
        for d in doc["segments"]:
            if d["kind"] == "const":
                segs.append(ConstBlock(int(d["lo"]), int(d["hi"]), float(d["height"])))
            elif d["kind"] == "exp":
                segs.append(ExpTail(int(d["start"]), int(d["end"]), float(d["height"]), float(d["lambda"])))
            elif d["kind"] == "tree":
                segs.append(TreeBlock(int(d["block_root"]), int(d["depth_lo"]),
                                      int(d["depth_hi"]), float(d["height"])))
            else:
                raise ValueError(f"unknown segment kind {d['kind']!r}")
        return cls(segs, doc.get("domain_size"))

    @classmethod
    def from_json(cls, text: str) -> "Envelope":
        return cls.from_dict(json.loads(text))


def density_at(env: Envelope, x: int) -> float:
    return env.density_at(x)


def total_mass(env: Envelope) -> float:
    return env.total_mass


def sample_proposal(env: Envelope, rng) -> int:
    return env.sample_proposal(rng)
