import io

import numpy as np
import pytest

from netanomaly.graph import (
    EdgeListParseError,
    GraphError,
    GroundTruth,
    from_edges,
    load_edge_list,
    load_ground_truth,
    serialize,
    strengths,
    symmetrise,
    weight_percentile,
    write_ground_truth,
)


def test_parse_small_list():
    g = load_edge_list("0,1,0.5\n1,2,0.7")
    assert (g.n, g.m) == (3, 2)
    assert g.node_labels() == ["0", "1", "2"]


def test_empty_stream_rejected():
    with pytest.raises(GraphError, match="empty graph"):
        load_edge_list("")


def test_self_loop_rejected_unless_allowed():
    with pytest.raises(EdgeListParseError):
        load_edge_list("0,0,1.0")
    assert load_edge_list("0,0,1.0", allow_self_loops=True).m == 1


@pytest.mark.parametrize("line", ["a,b", "a,b,x", "a,b,-1", "a,b,0", ",b,1"])
def test_malformed_lines(line):
    with pytest.raises(EdgeListParseError) as err:
        load_edge_list("x,y,1\n" + line)
    assert err.value.args[0].startswith("line 2") or "2" in str(err.value)


def test_round_trip_preserves_weights_and_isolated_nodes():
    g = from_edges(5, [(0, 1, 0.1), (3, 2, 1 / 3)])
    h = load_edge_list(serialize(g))
    assert h.n == 5
    np.testing.assert_array_equal(h.weight, g.weight)
    assert serialize(from_edges(5, zip(h.src, h.dst, h.weight))) == serialize(g)


def test_symmetrise():
    assert symmetrise(from_edges(2, [(0, 1, 2.0)]))[1, 0] == 2.0
    m = symmetrise(from_edges(2, [(0, 1, 2.0), (1, 0, 3.0)]))
    assert m[0, 1] == m[1, 0] == 5.0
    assert not symmetrise(from_edges(3, [])).any()


def test_parallel_edges_summed_by_simple():
    g = from_edges(2, [(0, 1, 1.0), (0, 1, 2.5)])
    s = g.simple()
    assert s.m == 1 and s.weight[0] == 3.5


def test_weight_percentile():
    assert weight_percentile(from_edges(5, [(0, i, w) for i, w in zip(range(1, 5), (1, 2, 3, 4))]), 0.5) == 2.5
    assert weight_percentile(from_edges(2, [(0, 1, 7.0)]), 0.3) == 7.0
    g = from_edges(101, [(0, i, float(i)) for i in range(1, 101)])
    ref = sorted(range(1, 101))
    pos = 0.99 * 99
    lo = int(pos)
    assert weight_percentile(g, 0.99) == pytest.approx(ref[lo] + (pos - lo) * (ref[lo + 1] - ref[lo]))
    assert weight_percentile(g, 0.99) == pytest.approx(99.01)


def test_strengths():
    s_in, s_out, tot = strengths(from_edges(3, [(0, 1, 2.0)]))
    assert (s_in[1], s_out[1], tot[1]) == (2.0, 0.0, 2.0)
    assert (s_in[2], s_out[2], tot[2]) == (0, 0, 0)
    star = strengths(from_edges(6, [(i, 0, 1.0) for i in range(1, 6)]))
    assert star[0][0] == 5


def test_subgraph_relabels_in_given_order():
    g = from_edges(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0)])
    sub = g.subgraph([2, 1])
    assert sub.n == 2 and list(zip(sub.src, sub.dst, sub.weight)) == [(1, 0, 2.0)]


def test_invalid_graphs():
    with pytest.raises(GraphError):
        from_edges(2, [(0, 2, 1.0)])
    with pytest.raises(GraphError):
        from_edges(2, [(0, 1, 0.0)])


def test_ground_truth_round_trip():
    g = load_edge_list("a,b,1\nb,c,1\n")
    truth = GroundTruth(np.array([1, 0, 1], dtype=np.int8))
    buf = io.StringIO()
    write_ground_truth(truth, g, buf)
    back = load_ground_truth(buf.getvalue(), g)
    np.testing.assert_array_equal(back.labels, truth.labels)
    with pytest.raises(EdgeListParseError):
        load_ground_truth("zz,1\n", g)
