"""Order-statistic map over ``(value, index)`` pairs.

An AVL tree augmented with subtree sizes. Keys are ordered lexicographically,
so among equal values the larger index ranks higher in the descending order
used by :meth:`OrderStatMap.kth_largest`. Every operation is O(log K) in the
worst case; ``visits`` counts nodes touched so tests can check that.
"""
from __future__ import annotations

import math
from typing import Iterator

import numpy as np

# AVL height is at most 1.4405 * log2(K + 2); an update walks two root-to-leaf paths.
VISIT_CONSTANT = 3.0


class _Node:
    __slots__ = ("value", "index", "left", "right", "height", "size")

    def __init__(self, value, index):
        self.value = value
        self.index = index
        self.left = None
        self.right = None
        self.height = 1
        self.size = 1


def _h(n):
    return n.height if n is not None else 0


def _s(n):
    return n.size if n is not None else 0


def _fix(n):
    hl, hr = _h(n.left), _h(n.right)
    n.height = (hl if hl > hr else hr) + 1
    n.size = _s(n.left) + _s(n.right) + 1


def _rotate_right(n):
    m = n.left
    n.left = m.right
    m.right = n
    _fix(n)
    _fix(m)
    return m


def _rotate_left(n):
    m = n.right
    n.right = m.left
    m.left = n
    _fix(n)
    _fix(m)
    return m


def _rebalance(n):
    _fix(n)
    bal = _h(n.left) - _h(n.right)
    if bal > 1:
        if _h(n.left.left) < _h(n.left.right):
            n.left = _rotate_left(n.left)
        return _rotate_right(n)
    if bal < -1:
        if _h(n.right.right) < _h(n.right.left):
            n.right = _rotate_right(n.right)
        return _rotate_left(n)
    return n


class OrderStatMap:
    """Holds exactly one ``(value, index)`` entry per index ``1..K``.

    Parameters
    ----------
    values : array-like of float
        ``values[i - 1]`` is the initial value of index ``i``.
    """

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size < 1:
            raise ValueError("an order-statistic map needs at least one entry")
        order = np.lexsort((np.arange(1, values.size + 1), values))
        pairs = [(float(values[j]), int(j) + 1) for j in order]
        self._root = self._build(pairs, 0, len(pairs))
        self.n_entries = len(pairs)
        self.visits = 0
        self.kth_calls = 0

    def _build(self, pairs, lo, hi):
        if lo >= hi:
            return None
        mid = (lo + hi) // 2
        node = _Node(*pairs[mid])
        node.left = self._build(pairs, lo, mid)
        node.right = self._build(pairs, mid + 1, hi)
        _fix(node)
        return node

    def __len__(self):
        return self.n_entries

    def __iter__(self) -> Iterator[tuple[float, int]]:
        """Entries in ascending dictionary order."""
        stack, node = [], self._root
        while stack or node is not None:
            while node is not None:
                stack.append(node)
                node = node.left
            node = stack.pop()
            yield node.value, node.index
            node = node.right

    @property
    def height(self) -> int:
        return _h(self._root)

    def kth_largest(self, k: int) -> tuple[float, int]:
        """The ``k``-th largest entry, ``k = 1`` being the maximum."""
        if not 1 <= k <= self.n_entries:
            raise IndexError(f"k={k} outside [1, {self.n_entries}]")
        self.kth_calls += 1
        r = self.n_entries - k + 1
        node = self._root
        visits = 0
        while True:
            visits += 1
            ls = node.left.size if node.left is not None else 0
            if r <= ls:
                node = node.left
            elif r == ls + 1:
                self.visits += visits
                return node.value, node.index
            else:
                r -= ls + 1
                node = node.right

    def update(self, index: int, old_value: float, new_value: float) -> None:
        """Replace ``(old_value, index)`` by ``(new_value, index)``.

        Raises ``KeyError`` when ``(old_value, index)`` is not stored.
        """
        old_value, new_value, index = float(old_value), float(new_value), int(index)
        self._root = self._delete(self._root, old_value, index)
        self._root = self._insert(self._root, new_value, index)

    def _insert(self, node, value, index):
        if node is None:
            return _Node(value, index)
        self.visits += 1
        if value < node.value or (value == node.value and index < node.index):
            node.left = self._insert(node.left, value, index)
        else:
            node.right = self._insert(node.right, value, index)
        return _rebalance(node)

    def _delete(self, node, value, index):
        if node is None:
            raise KeyError((value, index))
        self.visits += 1
        if value == node.value and index == node.index:
            if node.left is None:
                return node.right
            if node.right is None:
                return node.left
            succ = node.right
            while succ.left is not None:
                self.visits += 1
                succ = succ.left
            node.value, node.index = succ.value, succ.index
            node.right = self._delete_min(node.right)
        elif value < node.value or (value == node.value and index < node.index):
            node.left = self._delete(node.left, value, index)
        else:
            node.right = self._delete(node.right, value, index)
        return _rebalance(node)

    def _delete_min(self, node):
        if node.left is None:
            return node.right
        node.left = self._delete_min(node.left)
        return _rebalance(node)

    def check_invariants(self) -> None:
        """Assert ordering, subtree sizes and AVL balance on every node (O(K))."""

        def walk(node):
            if node is None:
                return 0, 0
            hl, sl = walk(node.left)
            hr, sr = walk(node.right)
            assert abs(hl - hr) <= 1, "AVL balance violated"
            assert node.size == sl + sr + 1, "stale subtree size"
            assert node.height == max(hl, hr) + 1, "stale height"
            return node.height, node.size

        _, size = walk(self._root)
        assert size == self.n_entries
        keys = list(self)
        assert all(a < b for a, b in zip(keys, keys[1:])), "keys out of order"

    def max_height(self) -> float:
        """Worst-case AVL height for the current size."""
        return 1.4405 * math.log2(self.n_entries + 2)


def build(values) -> OrderStatMap:
    return OrderStatMap(values)


def update(m: OrderStatMap, index: int, old_value: float, new_value: float) -> None:
    m.update(index, old_value, new_value)


def kth_largest(m: OrderStatMap, k: int) -> tuple[float, int]:
    return m.kth_largest(k)
