"""Compare the numba and pure-numpy execution paths.

Each backend runs in its own interpreter because DYNPPE_DISABLE_NUMBA is
read at import time.  Usage:

    python3 benchmarks/bench_kernels.py [--nodes 2000] [--repeat 3]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from dynppe._accel import backend_name
from dynppe.graph import EdgeEvent, EventLog, GraphState, Op, SnapshotDelta
from dynppe.hashing import HashConfig, project
from dynppe.ppr import PushParams, fresh_push, refresh

n, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
pairs = rng.integers(0, n, size=(6 * n, 2))
edges = sorted({(int(min(a, b)), int(max(a, b))) for a, b in pairs if a != b})[: 5 * n]
g = GraphState.from_edges(edges)
params = PushParams(0.15, 0.0, 0.1 / g.degree_sum)
cfg = HashConfig.from_seed(0, 128)

def best(fn):
    fn()  # compile / warm caches
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)

state = fresh_push(0, g, params)
drop = edges[: max(1, n // 20)]

def dynamic():
    h = g.copy()
    s = fresh_push(0, h, params)
    log = EventLog()
    h.apply_delta(SnapshotDelta([EdgeEvent(u, v, Op.DELETE, k) for k, (u, v) in enumerate(drop)], 1), log)
    refresh(s, log, h, PushParams(0.15, 0.0, 0.1 / h.degree_sum))

result = {
    "backend": backend_name(),
    "forward_push": best(lambda: fresh_push(0, g, params)),
    "push_plus_refresh": best(dynamic),
    "project": best(lambda: project(state.p, g.active_nodes, cfg)),
    "checksum": float(project(state.p, g.active_nodes, cfg).sum()),
}
print(json.dumps(result))
"""


def run_backend(disable: bool, nodes: int, repeat: int) -> dict:
    env = dict(os.environ, DYNPPE_DISABLE_NUMBA="1" if disable else "0")
    start = time.perf_counter()
    out = subprocess.run(
        [sys.executable, "-c", WORKER, str(nodes), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    result = json.loads(out.stdout.strip().splitlines()[-1])
    result["process_seconds"] = time.perf_counter() - start
    return result


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast = run_backend(False, args.nodes, args.repeat)
    slow = run_backend(True, args.nodes, args.repeat)
    print(f"n={args.nodes}, average degree 10, best of {args.repeat}")
    print(f"{'kernel':<20}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}")
    for key in ("forward_push", "push_plus_refresh", "project"):
        a, b = fast[key], slow[key]
        print(f"{key:<20}{a * 1e3:>10.2f}ms{b * 1e3:>10.2f}ms{b / a:>9.1f}x")
    same = abs(fast["checksum"] - slow["checksum"]) <= 1e-9 * max(1.0, abs(fast["checksum"]))
    print(f"projection checksums agree: {same}")


if __name__ == "__main__":
    main()
