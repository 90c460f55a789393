"""Query access to a pmf known only up to an unknown positive constant.

Every external index is 1-based: a domain of size ``N`` is ``{1, ..., N}``.
A :class:`QueryCountedPMF` counts how many times it has been asked for a
value, which is the cost measure every envelope builder is judged by.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

from ._validation import check_positive_int, check_weights


class OracleRangeError(IndexError):
    """Raised when a query falls outside ``[1, N]``."""


@dataclass(frozen=True)
class TreePMF:
    """Unnormalized mass on a complete binary tree, stored in heap order.

    Vertex ``v`` has children ``2v`` and ``2v + 1``; the root is ``1``.
    ``values[v - 1]`` holds the mass of vertex ``v``.
    """

    depth: int
    values: np.ndarray

    def __post_init__(self):
        depth = check_positive_int(self.depth, "depth", minimum=0)
        values = check_weights(self.values, "values")
        if values.shape[0] != 2 ** (depth + 1) - 1:
            raise ValueError(
                f"a tree of depth {depth} has {2 ** (depth + 1) - 1} vertices, "
                f"got {values.shape[0]} values"
            )
        values.setflags(write=False)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @staticmethod
    def vertex_depth(x: int) -> int:
        return int(x).bit_length() - 1


Backend = Union[np.ndarray, Callable[[int], float], TreePMF]


class QueryCountedPMF:
    """Oracle returning ``p~(x) = Z * p(x)`` and counting the calls.

    Parameters
    ----------
    backend : array-like, callable or TreePMF
        Dense nonnegative values (``backend[x - 1]`` is ``p~(x)``), a function
        of the 1-based index, or a tree in heap order.
    domain_size : int, optional
        Required for callables; inferred otherwise.
    """

    def __init__(self, backend: Backend, domain_size: int | None = None):
        self._lock = threading.Lock()
        self._count = 0
        self.tree = None
        if isinstance(backend, TreePMF):
            self.tree = backend
            self._values = backend.values
            self._fn = None
        elif callable(backend):
            if domain_size is None:
                raise ValueError("domain_size is required for a callback backend")
            self._values = None
            self._fn = backend
        else:
            self._values = check_weights(backend, "backend")
            self._values.setflags(write=False)
            self._fn = None
        inferred = None if self._values is None else self._values.shape[0]
        if domain_size is None:
            domain_size = inferred
        elif inferred is not None and domain_size != inferred:
            raise ValueError(f"domain_size={domain_size} but backend has {inferred} values")
        self.domain_size = check_positive_int(domain_size, "domain_size")

    def __repr__(self):
        kind = "tree" if self.tree is not None else ("callback" if self._fn else "dense")
        return f"QueryCountedPMF({kind}, N={self.domain_size}, queries={self._count})"

    def _check_index(self, x):
        if not 1 <= x <= self.domain_size:
            raise OracleRangeError(f"index {x} outside [1, {self.domain_size}]")

    def _evaluate(self, x: int) -> float:
        if self._fn is None:
            return float(self._values[x - 1])
        value = float(self._fn(x))
        if not (value >= 0.0 and math.isfinite(value)):
            raise ValueError(f"oracle callback returned {value} at x={x}")
        return value

    def query(self, x: int) -> float:
        """Return ``p~(x)``; costs one query."""
        x = int(x)
        self._check_index(x)
        value = self._evaluate(x)
        with self._lock:
            self._count += 1
        return value

    __call__ = query

    def query_many(self, xs) -> np.ndarray:
        """Vectorized :meth:`query`; costs ``len(xs)`` queries."""
        xs = np.asarray(xs, dtype=np.int64)
        if xs.size and (xs.min() < 1 or xs.max() > self.domain_size):
            raise OracleRangeError(f"indices outside [1, {self.domain_size}]")
        if self._fn is None:
            out = self._values[xs - 1].astype(np.float64)
        else:
            out = np.array([self._evaluate(int(x)) for x in xs.ravel()], dtype=np.float64)
            out = out.reshape(xs.shape)
        with self._lock:
            self._count += int(xs.size)
        return out

    @property
    def query_count(self) -> int:
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    @classmethod
    def from_text(cls, path) -> "QueryCountedPMF":
        """Load a dense backend from a file holding one nonnegative value per line."""
        return cls(load_dense(path))


def query_count(oracle: QueryCountedPMF) -> int:
    return oracle.query_count


def reset_count(oracle: QueryCountedPMF) -> None:
    oracle.reset_count()


def load_dense(path) -> np.ndarray:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    return check_weights([float(ln) for ln in lines if ln], "values")


def save_dense(path, values) -> None:
    values = check_weights(values, "values")
    Path(path).write_text("".join(f"{v!r}\n" for v in values.tolist()))
