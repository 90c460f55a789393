import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sublinrej.oracle import (
    OracleRangeError,
    QueryCountedPMF,
    TreePMF,
    load_dense,
    query_count,
    reset_count,
    save_dense,
)


def test_dense_query_reads_value_and_counts():
    o = QueryCountedPMF([3.0, 2.0, 1.0])
    assert o.query_count == 0
    assert o.query(2) == 2.0
    assert o.query_count == 1


def test_callback_backend():
    o = QueryCountedPMF(lambda x: 2.0 ** -(x - 1), domain_size=8)
    assert o(4) == 0.125


def test_callback_needs_domain_size():
    with pytest.raises(ValueError):
        QueryCountedPMF(lambda x: 1.0)


def test_repeated_queries_identical_and_counted():
    o = QueryCountedPMF(np.random.default_rng(1).random(10))
    vals = {o.query(1) for _ in range(100)}
    assert len(vals) == 1
    assert o.query_count == 100


def test_count_and_reset():
    o = QueryCountedPMF([1.0, 1.0, 1.0])
    assert query_count(o) == 0
    for x in (1, 2, 3):
        o.query(x)
    assert query_count(o) == 3
    reset_count(o)
    o.query(1)
    assert query_count(o) == 1


def test_query_many_counts_each_point():
    o = QueryCountedPMF(np.arange(1.0, 6.0))
    out = o.query_many([1, 5, 5])
    np.testing.assert_array_equal(out, [1.0, 5.0, 5.0])
    assert o.query_count == 3


@pytest.mark.parametrize("x", [0, 4, -1])
def test_out_of_range(x):
    o = QueryCountedPMF([1.0, 2.0, 3.0])
    with pytest.raises(OracleRangeError):
        o.query(x)
    assert o.query_count == 0


@pytest.mark.parametrize("bad", [[0.0, 0.0], [1.0, -1.0], [1.0, np.nan], [1.0, np.inf], []])
def test_rejects_invalid_dense(bad):
    with pytest.raises(ValueError):
        QueryCountedPMF(bad)


def test_callback_value_checked():
    o = QueryCountedPMF(lambda x: -1.0, domain_size=3)
    with pytest.raises(ValueError):
        o.query(1)


def test_zero_values_allowed():
    o = QueryCountedPMF([1.0, 0.0, 0.0])
    assert o.query(3) == 0.0


def test_tree_backend():
    t = TreePMF(2, [4.0, 2.0, 1.0, 1.0, 1.0, 0.5, 0.5])
    o = QueryCountedPMF(t)
    assert o.domain_size == 7
    assert o.tree is t
    assert o.query(3) == 1.0
    assert TreePMF.vertex_depth(1) == 0 and TreePMF.vertex_depth(7) == 2


def test_tree_size_checked():
    with pytest.raises(ValueError):
        TreePMF(2, [1.0, 0.5, 0.5])


def test_text_roundtrip(tmp_path):
    vals = [0.1, 1e-300, 3.0, 0.0]
    path = tmp_path / "p.txt"
    save_dense(path, vals)
    np.testing.assert_array_equal(load_dense(path), vals)
    assert QueryCountedPMF.from_text(path).domain_size == 4


def test_counter_is_thread_safe():
    o = QueryCountedPMF(np.ones(4))

    def work():
        for _ in range(2000):
            o.query(1)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert o.query_count == 8000


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=50).filter(lambda v: max(v) > 0),
       st.data())
def test_counter_matches_calls(values, data):
    o = QueryCountedPMF(values)
    xs = data.draw(st.lists(st.integers(1, len(values)), max_size=30))
    for x in xs:
        assert o.query(x) == values[x - 1]
    assert o.query_count == len(xs)
