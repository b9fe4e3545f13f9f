import numpy as np
import pytest

from dynppe.errors import ConfigError, NoEdgesError, SourceError
from dynppe.graph import EdgeEvent, GraphState, Op, SnapshotDelta
from dynppe.hashing import project
from dynppe.oracle import exact_ppr
from dynppe.pipeline import RunConfig, adaptive_epsilon, initialize, process_snapshot, run, run_state
from dynppe.ppr import PushParams, fresh_push
from streams import er_stream, graph_of, mixed_stream


def ins(u, v, t=0):
    return EdgeEvent(u, v, Op.INSERT, t)


@pytest.mark.parametrize(
    "kw",
    [{"alpha": 0.0}, {"epsilon": 0.0}, {"epsilon": 2.5}, {"dim": 0}, {"beta": 1.0}, {"parallelism": 0}],
)
def test_run_config_validation(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


@pytest.mark.parametrize("eps, m, want", [(0.1, 1000, 1e-4), (0.1, 2, 0.05), (2.0, 1, 2.0)])
def test_adaptive_epsilon(eps, m, want):
    assert adaptive_epsilon(RunConfig(epsilon=eps), m) == pytest.approx(want)


def test_adaptive_epsilon_without_edges():
    with pytest.raises(NoEdgesError):
        adaptive_epsilon(RunConfig(), 0)


def test_initialize_uses_initial_degree_sum():
    ps = initialize(GraphState.from_edges([(0, 1)]), {0}, RunConfig(epsilon=0.1))
    assert ps.epsilon_log[0] == pytest.approx(0.05)
    assert ps.tracked[0].ppr.last_epsilon == pytest.approx(0.05)
    assert ps.tracked[0].history.snapshots == [0]


def test_initialize_rejects_empty_subset():
    with pytest.raises(ConfigError):
        initialize(GraphState(), set(), RunConfig())


def test_absent_node_is_pending():
    ps = initialize(GraphState.from_edges([(0, 1)]), {5}, RunConfig())
    tn = ps.tracked[5]
    assert tn.ppr is None and not tn.initialized
    assert tn.history.initialized == [False]
    assert not tn.history.vectors[0].any()


def test_pending_node_activates_on_first_edge():
    ps = initialize(GraphState(), {0}, RunConfig(epsilon=0.1))
    assert ps.tracked[0].ppr is None
    out = process_snapshot(ps, SnapshotDelta([ins(1, 2, 1)], 1))
    assert out == {} and ps.tracked[0].ppr is None
    out = process_snapshot(ps, SnapshotDelta([ins(0, 1, 2), ins(0, 3, 3)], 2))
    tn = ps.tracked[0]
    assert 0 in out and tn.initialized
    assert tn.ppr.last_epsilon == pytest.approx(0.1 / 6)
    assert tn.history.initialized == [False, False, True]
    assert tn.history.snapshots == [0, 1, 2]


def test_empty_delta_reproduces_previous_output():
    segs = er_stream(60, 6, 3, 40, seed=1)
    ps = run_state(segs, [0, 1, 2], RunConfig())
    before = {s: tn.history.vectors[-1] for s, tn in ps.tracked.items()}
    out = process_snapshot(ps, SnapshotDelta([], ps.snapshot + 1))
    for s, w in out.items():
        assert w.tobytes() == before[s].tobytes()


def test_adjacent_insert_changes_embedding_and_meets_bound():
    g = GraphState.from_edges([(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)])
    cfg = RunConfig(epsilon=0.1)
    ps = initialize(g, {0}, cfg)
    w0 = ps.tracked[0].history.vectors[-1]
    out = process_snapshot(ps, SnapshotDelta([ins(0, 2, 1)], 1))
    assert not np.array_equal(out[0], w0)
    assert exact_ppr(ps.graph, 0, cfg.alpha).l1_error(ps.tracked[0].ppr.p) <= cfg.epsilon


def test_single_snapshot_equals_initialize_then_project():
    edges = [(0, 1), (1, 2), (0, 2), (2, 3)]
    cfg = RunConfig(epsilon=0.05, dim=16, seed=7)
    hist = run([[ins(u, v, t) for t, (u, v) in enumerate(edges)]], {0}, cfg)
    g = GraphState.from_edges(edges)
    s = fresh_push(0, g, PushParams(cfg.alpha, 0.0, cfg.epsilon / g.degree_sum))
    want = project(s.estimate, g.active_nodes, cfg.hash_config)
    assert len(hist[0]) == 1
    np.testing.assert_allclose(hist[0].vectors[0], want, rtol=0, atol=1e-12)


def test_symmetric_nodes_have_equal_norms():
    k3 = [[ins(0, 1, 0), ins(1, 2, 1), ins(0, 2, 2)]]
    hist = run(k3, {1, 2}, RunConfig(epsilon=1e-3))
    assert np.linalg.norm(hist[1].vectors[0]) == pytest.approx(np.linalg.norm(hist[2].vectors[0]), rel=1e-9)


def test_every_snapshot_meets_global_bound():
    segs = er_stream(120, 8, 10, 48, seed=3)
    cfg = RunConfig(epsilon=0.1)
    subset = [0, 5, 17]
    g = GraphState()
    ps = run_state(segs[:1], subset, cfg)
    g.apply_events(segs[0])
    for t, seg in enumerate(segs[1:], start=1):
        process_snapshot(ps, SnapshotDelta(list(seg), t))
        g.apply_events(seg)
        assert ps.epsilon_log[t] == pytest.approx(cfg.epsilon / g.degree_sum)
        for s, tn in ps.tracked.items():
            if tn.initialized:
                assert tn.ppr.last_epsilon == ps.epsilon_log[t]
                assert exact_ppr(g, s, cfg.alpha).l1_error(tn.ppr.p) <= cfg.epsilon


def test_histories_cover_every_snapshot():
    segs = er_stream(50, 4, 6, 20, seed=4)
    hist = run(segs, [0, 1, 49], RunConfig())
    for h in hist.values():
        assert h.snapshots == list(range(len(segs)))
        assert h.matrix().shape == (len(segs), 128)
        # once initialized a node stays initialized
        first = h.initialized.index(True) if True in h.initialized else len(h.initialized)
        assert all(h.initialized[first:]) and not any(h.initialized[:first])


def test_parallelism_is_byte_identical():
    segs = mixed_stream(200, 600, 5, 80, seed=5)
    subset = list(range(0, 200, 13))
    a = run(segs, subset, RunConfig(parallelism=1))
    b = run(segs, subset, RunConfig(parallelism=8))
    for s in subset:
        assert a[s].matrix().tobytes() == b[s].matrix().tobytes()
        assert a[s].initialized == b[s].initialized


def test_subset_independence():
    segs = mixed_stream(150, 400, 4, 60, seed=6)
    full = run(segs, [3, 8, 40, 77], RunConfig())
    part = run(segs, [8, 77], RunConfig())
    for s in (8, 77):
        assert full[s].matrix().tobytes() == part[s].matrix().tobytes()


def test_source_failure_is_tagged():
    cfg = RunConfig(epsilon=1e-3, work_budget=5)
    with pytest.raises(SourceError) as exc:
        initialize(GraphState.from_edges([(0, 1), (1, 2), (0, 2)]), {2}, cfg)
    assert exc.value.source == 2


def test_work_log_records_snapshot_work():
    segs = er_stream(80, 6, 4, 30, seed=8)
    ps = run_state(segs, [0, 1], RunConfig())
    assert set(ps.work_log) == set(range(len(segs)))
    assert all(w >= 0 for w in ps.work_log.values())
    assert sum(ps.work_log.values()) == sum(tn.ppr.work_counter for tn in ps.tracked.values() if tn.ppr)


def test_matches_static_graph_after_stream():
    segs = mixed_stream(100, 300, 3, 50, seed=9)
    cfg = RunConfig(epsilon=0.1)
    ps = run_state(segs, [1, 2, 3], cfg)
    g = graph_of(segs)
    assert ps.graph.adjacency() == g.adjacency()
    for s, tn in ps.tracked.items():
        if tn.initialized and g.degree(s):
            assert exact_ppr(g, s, cfg.alpha).l1_error(tn.ppr.p) <= cfg.epsilon
