import numpy as np
import pytest

from dynppe.commute import (
    CommuteState,
    InitMode,
    commute_apply_event,
    commute_init,
    commute_run,
)
from dynppe.errors import DynPPEError, UnsupportedEventError
from dynppe.graph import EdgeEvent, GraphState, Op
from streams import insert_stream


def ins(u, v, t=0):
    return EdgeEvent(u, v, Op.INSERT, t)


def test_substitution_example():
    # u has one older neighbour, so post-event d(u)=2, d(v)=1
    g = GraphState.from_edges([(0, 9), (0, 1)])
    st = CommuteState(dim=2, vectors={0: np.array([1.0, 0.0]), 1: np.array([0.0, 1.0])})
    commute_apply_event(st, ins(0, 1), g)
    np.testing.assert_allclose(st.vectors[0], [2 / 3, 1 / 2], rtol=0, atol=1e-12)
    np.testing.assert_allclose(st.vectors[1], [2 / 3, 1.0], rtol=0, atol=1e-12)


def test_equal_vectors_scale():
    g = GraphState.from_edges([(0, 1), (0, 2), (1, 3)])
    x = np.array([0.3, -1.2, 2.0])
    st = CommuteState(dim=3, vectors={0: x.copy(), 1: x.copy()})
    commute_apply_event(st, ins(0, 1), g)
    d = 2
    np.testing.assert_allclose(st.vectors[0], (d / (d + 1) + 1 / d) * x, rtol=0, atol=1e-12)


def test_zero_vectors_stay_zero():
    g = GraphState.from_edges([(0, 1)])
    st = CommuteState(dim=4, vectors={0: np.zeros(4), 1: np.zeros(4)})
    commute_apply_event(st, ins(0, 1), g)
    assert not st.vectors[0].any() and not st.vectors[1].any()


def test_deletion_rejected():
    g = GraphState()
    with pytest.raises(UnsupportedEventError):
        commute_apply_event(CommuteState(), EdgeEvent(0, 1, Op.DELETE), g)
    with pytest.raises(UnsupportedEventError):
        commute_run([[ins(0, 1, 0)], [EdgeEvent(0, 1, Op.DELETE, 1)]], {0})


def test_uniform_range():
    st = CommuteState(dim=4, init_mode=InitMode.UNIFORM, rng_seed=3)
    for node in range(200):
        w = commute_init(st, node)
        assert np.all(np.abs(w) <= 0.125)


def test_gaussian_variance():
    w = commute_init(CommuteState(dim=10**4, rng_seed=1), 42)
    assert abs(w.var() - 0.1) <= 0.005


def test_init_deterministic_and_unique():
    a = commute_init(CommuteState(dim=16, rng_seed=5), 7)
    b = commute_init(CommuteState(dim=16, rng_seed=5), 7)
    c = commute_init(CommuteState(dim=16, rng_seed=5), 8)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    st = CommuteState(dim=16)
    commute_init(st, 1)
    with pytest.raises(DynPPEError):
        commute_init(st, 1)


def test_empty_stream_keeps_initial_vectors():
    hist = commute_run([], {3, 4}, dim=8, seed=2)
    st = CommuteState(dim=8, rng_seed=2)
    for node in (3, 4):
        assert len(hist[node]) == 1
        assert np.array_equal(hist[node].vectors[0], commute_init(st, node))


def test_single_edge_single_update():
    hist = commute_run([[ins(0, 1, 0)]], {0, 1}, dim=4, seed=0)
    st = CommuteState(dim=4)
    w0, w1 = commute_init(st, 0), commute_init(st, 1)
    wu = 0.5 * w0 + w1
    wv = 0.5 * w1 + wu
    np.testing.assert_allclose(hist[0].vectors[0], wu, rtol=0, atol=1e-12)
    np.testing.assert_allclose(hist[1].vectors[0], wv, rtol=0, atol=1e-12)


def test_path_growth_norm_bound():
    edges = [(k, k + 1) for k in range(100)]
    hist = commute_run(insert_stream(edges, 10), range(101), dim=16, seed=4)
    st = CommuteState(dim=16, rng_seed=4)
    init_norm = max(np.linalg.norm(commute_init(st, k)) for k in range(101))
    # norm recursion: ||w_u|| <= d/(d+1) ||w_u|| + ||w_v||/d; track the bound per node
    bound = dict.fromkeys(range(101), init_norm)
    g = GraphState()
    for u, v in edges:
        g.apply_event(ins(u, v))
        du, dv = g.degree(u), g.degree(v)
        bound[u] = du / (du + 1) * bound[u] + bound[v] / du
        bound[v] = dv / (dv + 1) * bound[v] + bound[u] / dv
    for node, h in hist.items():
        last = h.vectors[-1]
        assert np.all(np.isfinite(last))
        assert np.linalg.norm(last) <= bound[node] + 1e-12


def test_locality_only_endpoints_move():
    g = GraphState()
    st = CommuteState(dim=8, rng_seed=9)
    for node in range(6):
        commute_init(st, node)
    before = {k: v.copy() for k, v in st.vectors.items()}
    g.apply_event(ins(2, 4))
    commute_apply_event(st, ins(2, 4), g)
    for k in (0, 1, 3, 5):
        assert np.array_equal(st.vectors[k], before[k])


def test_disconnected_components_independent():
    left = [ins(0, 1, 0), ins(1, 2, 1), ins(0, 2, 2)]
    right = [ins(10, 11, 3), ins(11, 12, 4)]
    other = [ins(10, 12, 3), ins(10, 13, 4)]
    a = commute_run([left + right], {0, 1, 2}, dim=8, seed=1)
    b = commute_run([left + other], {0, 1, 2}, dim=8, seed=1)
    for node in (0, 1, 2):
        assert np.array_equal(a[node].vectors[0], b[node].vectors[0])


def test_run_deterministic():
    segs = insert_stream([(k, (3 * k + 1) % 50) for k in range(50) if k != (3 * k + 1) % 50], 10)
    a = commute_run(segs, {0, 7}, dim=8, seed=3)
    b = commute_run(segs, {0, 7}, dim=8, seed=3)
    assert a[0].matrix().tobytes() == b[0].matrix().tobytes()
    assert a[0].snapshots == list(range(len(segs)))
