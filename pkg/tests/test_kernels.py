"""Compiled kernels, their interpreted originals and the numpy fallbacks agree."""

import numpy as np
import pytest

from dynppe import kernels
from dynppe._accel import NUMBA_ENABLED, backend_name
from dynppe.graph import EventLog, GraphState
from streams import er_edges, mixed_stream

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba disabled")


def py(fn):
    return getattr(fn, "py_func", fn)


def test_backend_name():
    assert backend_name() == ("numba" if NUMBA_ENABLED else "numpy")


def _push_inputs(seed):
    g = GraphState.from_edges(er_edges(80, 6, np.random.default_rng(seed)))
    offset, deg, nbr = g.kernel_view()
    n = deg.shape[0]
    p = np.zeros(n)
    r = np.zeros(n)
    r[int(g.active()[0])] = 1.0
    return offset, deg, nbr, p, r


@needs_numba
@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("beta", [0.0, 0.3])
def test_forward_push_compiled_matches_interpreted(seed, beta):
    outs = []
    for fn in (kernels.forward_push_kernel, py(kernels.forward_push_kernel)):
        offset, deg, nbr, p, r = _push_inputs(seed)
        n = deg.shape[0]
        res = fn(offset, deg, nbr, p, r, np.zeros(n, np.bool_), np.zeros(n, np.int64),
                 1e-6, 0.15, beta, 0, 10**10, -1)
        outs.append((tuple(int(x) for x in res), p, r))
    (ra, pa, rra), (rb, pb, rrb) = outs
    assert ra == rb
    assert np.array_equal(pa, pb) and np.array_equal(rra, rrb)


def test_forward_push_reports_budget_and_interrupt():
    offset, deg, nbr, p, r = _push_inputs(0)
    n = deg.shape[0]
    args = (np.zeros(n, np.bool_), np.zeros(n, np.int64), 1e-6, 0.15, 0.0, 0)
    _, _, status = kernels.forward_push_kernel(offset, deg, nbr, p, r, *args, 10, -1)
    assert status == kernels.OVER_BUDGET
    offset, deg, nbr, p, r = _push_inputs(0)
    pushes, _, status = kernels.forward_push_kernel(offset, deg, nbr, p, r, *args, 10**10, 3)
    assert (pushes, status) == (3, kernels.INTERRUPTED)


@needs_numba
def test_adjust_compiled_matches_interpreted():
    segs = mixed_stream(60, 150, 1, 120, seed=5)
    g = GraphState()
    g.apply_events(segs[0])
    log = EventLog()
    g.apply_events(segs[1], log)
    us, vs, ins, du, dv = log.arrays()
    rng = np.random.default_rng(0)
    base_p = rng.random(g.num_slots) * (rng.random(g.num_slots) < 0.3)
    base_r = rng.normal(size=g.num_slots) * 1e-3
    # no estimate mass at nodes whose first edge arrives in this batch
    first = np.asarray(log.deg_u)[np.asarray(log.insert)] == 1
    base_p[np.asarray(log.u)[np.asarray(log.insert)][first]] = 0.0
    first = np.asarray(log.deg_v)[np.asarray(log.insert)] == 1
    base_p[np.asarray(log.v)[np.asarray(log.insert)][first]] = 0.0
    out = []
    for fn in (kernels.adjust_kernel, py(kernels.adjust_kernel)):
        p, r = base_p.copy(), base_r.copy()
        code = fn(p, r, us, vs, ins, du, dv, 0.15)
        out.append((code, p, r))
    assert out[0][0] == out[1][0] == -1
    assert np.array_equal(out[0][1], out[1][1]) and np.array_equal(out[0][2], out[1][2])


def test_adjust_reports_degenerate_index():
    p = np.array([0.0, 0.2, 0.0])
    r = np.zeros(3)
    us = np.array([0, 1], np.int64)
    vs = np.array([2, 2], np.int64)
    code = kernels.adjust_kernel(p, r, us, vs, np.array([True, True]),
                                 np.array([1, 1], np.int64), np.array([1, 2], np.int64), 0.15)
    assert code == 1


def test_hash_tables_loop_matches_numpy():
    a = kernels._hash_tables_loop(0, 5000, 17, 18, 100)
    b = kernels._hash_tables_np(0, 5000, 17, 18, 100)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    c = kernels._hash_tables_loop(4000, 5000, 17, 18, 100)
    assert np.array_equal(c[0], a[0][4000:])


def test_murmur_vectorised_matches_scalar():
    keys = np.array([0, 1, 2**32 + 5, 2**62 + 11], dtype=np.uint64)
    vec = kernels.murmur3_u64_np(keys, 99)
    assert [int(x) for x in vec] == [int(kernels.murmur3_u64(int(k), 99)) for k in keys]


def test_projection_loop_matches_numpy():
    rng = np.random.default_rng(4)
    p = rng.random(3000) * (rng.random(3000) < 0.1) * 0.01
    idx, sgn = kernels._hash_tables_np(0, 3000, 1, 2, 64)
    a = kernels._project_loop(p, 3000.0, idx, sgn, 64)
    b = kernels._project_np(p, 3000.0, idx, sgn, 64)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
