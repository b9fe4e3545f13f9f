"""Command line entry point: ``dynppe {embed,check,changes}``.

Exit codes: 0 success, 1 a check failed, 2 usage or validation error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._accel import backend_name
from .analytics import format_report, movement_records, rank_changes, score_records
from .commute import InitMode, commute_run
from .errors import (
    BudgetExceededError,
    ConfigError,
    DynPPEError,
    EventParseError,
    OracleTooLargeError,
    SourceError,
)
from .graph import GraphState, SnapshotDelta, read_event_file
from .oracle import ALL_PAIRS_CAP, check_invariant, check_mass_bound, check_symmetry, exact_ppr_many
from .pipeline import RunConfig, initialize, process_snapshot, run_state
from .ppr import residual_l1

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

EMBED_HEADER = "# dynppe-embeddings v1"


class UsageError(Exception):
    pass


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.15, help="teleport probability (default 0.15)")
    p.add_argument("--epsilon", type=float, default=0.1, help="global precision, at most 2 (default 0.1)")
    p.add_argument("--beta", type=float, default=0.0, help="push laziness (default 0)")
    p.add_argument("--snapshot-every", type=int, default=None,
                   help="cut a snapshot every N events instead of using #snapshot markers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynppe", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    e = sub.add_parser("embed", help="embed a tracked subset over an event stream")
    e.add_argument("--events", required=True, type=Path)
    e.add_argument("--subset", required=True, type=Path, help="one node id per line")
    e.add_argument("--out", required=True, type=Path)
    _config_args(e)
    e.add_argument("--dim", type=int, default=128)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--method", choices=("dynppe", "commute"), default="dynppe")
    e.add_argument("--commute-init", choices=[m.value for m in InitMode], default="gaussian")
    e.add_argument("--parallelism", type=int, default=1)

    c = sub.add_parser("check", help="verify error bounds and invariants against the oracle")
    c.add_argument("--events", required=True, type=Path)
    c.add_argument("--subset", type=Path, default=None, help="sources to check (default: all nodes)")
    _config_args(c)
    c.add_argument("--oracle-cap", type=int, default=ALL_PAIRS_CAP)
    c.add_argument("--out", type=Path, default=None)
    c.add_argument("--corrupt-residual", action="store_true", help=argparse.SUPPRESS)

    g = sub.add_parser("changes", help="rank embedding movement by z-score")
    g.add_argument("embeddings", type=Path, help="TSV written by `dynppe embed`")
    g.add_argument("--subset", type=Path, default=None)
    g.add_argument("--events", type=Path, default=None, help="event file for degree deltas")
    g.add_argument("--snapshot-every", type=int, default=None)
    g.add_argument("--min-degree-delta", type=int, default=None,
                   help="keep nodes whose degree grew by more than this (default 10 with --events)")
    g.add_argument("--out", type=Path, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"embed": cmd_embed, "check": cmd_check, "changes": cmd_changes}[args.command]
    try:
        return handler(args)
    except (UsageError, ConfigError, EventParseError) as exc:
        print(f"dynppe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleTooLargeError as exc:
        print(f"dynppe: error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SourceError as exc:
        print(f"dynppe: error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE if isinstance(exc.cause, BudgetExceededError) else EXIT_CHECK_FAILED
    except BudgetExceededError as exc:
        print(f"dynppe: error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"dynppe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DynPPEError as exc:
        print(f"dynppe: error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


# ---- shared helpers ----------------------------------------------------------


def read_subset(path: Path) -> list[int]:
    nodes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                node = int(line)
            except ValueError:
                raise EventParseError(f"bad node id {line!r} in subset file", line=lineno) from None
            if node < 0:
                raise EventParseError(f"negative node id {node} in subset file", line=lineno)
            nodes.append(node)
    if not nodes:
        raise UsageError(f"subset file {path} lists no nodes")
    return nodes


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _run_config(args, **extra) -> RunConfig:
    return RunConfig(alpha=args.alpha, epsilon=args.epsilon, beta=args.beta, **extra)


def format_vector(w: np.ndarray) -> str:
    return ",".join(format(float(x), ".9g") for x in w)


def write_embeddings(path: Path, histories, dim: int, method: str) -> None:
    lines = [f"{EMBED_HEADER} dim={dim} method={method}"]
    snaps = sorted({t for h in histories.values() for t in h.snapshots})
    for t in snaps:
        for node in sorted(histories):
            h = histories[node]
            k = h.snapshots.index(t)
            lines.append(f"{t}\t{node}\t{format_vector(h.vectors[k])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_embeddings(path: Path) -> tuple[dict[int, dict[int, np.ndarray]], dict[str, str]]:
    """``{snapshot: {node: vector}}`` plus the header fields."""
    table: dict[int, dict[int, np.ndarray]] = {}
    meta: dict[str, str] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if line.startswith(EMBED_HEADER):
                    meta = dict(tok.split("=", 1) for tok in line.split()[3:] if "=" in tok)
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise EventParseError("expected snapshot<TAB>node<TAB>vector", line=lineno)
            try:
                t, node = int(parts[0]), int(parts[1])
                vec = np.array([float(x) for x in parts[2].split(",")])
            except ValueError as exc:
                raise EventParseError(str(exc), line=lineno) from None
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise EventParseError(f"vector length {vec.shape[0]} != {dim}", line=lineno)
            table.setdefault(t, {})[node] = vec
    return table, meta


# ---- embed -------------------------------------------------------------------


def cmd_embed(args) -> int:
    start = time.perf_counter()
    if args.parallelism < 1:
        raise UsageError("--parallelism must be >= 1")
    cfg = _run_config(args, dim=args.dim, seed=args.seed, parallelism=args.parallelism)
    segments = read_event_file(args.events, args.snapshot_every)
    subset = read_subset(args.subset)

    degree_sums = []
    g = GraphState()
    for t, seg in enumerate(segments):
        if t == 0:
            g.apply_events(seg)
        else:
            g.apply_delta(SnapshotDelta(list(seg), t))
        degree_sums.append(g.degree_sum)

    pending = {}
    if args.method == "dynppe":
        ps = run_state(segments, subset, cfg)
        histories = {s: tn.history for s, tn in ps.tracked.items()}
        pending = {
            str(s): [t for t, ok in zip(h.snapshots, h.initialized) if not ok]
            for s, h in histories.items()
        }
        pending = {k: v for k, v in pending.items() if v}
    else:
        if args.beta != 0.0:
            raise UsageError("--beta applies to the dynppe method only")
        histories = commute_run(segments, subset, cfg.dim, InitMode(args.commute_init), cfg.seed)

    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_embeddings(args.out, histories, cfg.dim, args.method)
    manifest = {
        "tool": "dynppe",
        "version": __version__,
        "backend": backend_name(),
        "method": args.method,
        "config": {
            "alpha": cfg.alpha,
            "epsilon": cfg.epsilon,
            "beta": cfg.beta,
            "dim": cfg.dim,
            "seed": cfg.seed,
            "hash_seed_index": cfg.hash_config.seed_index,
            "hash_seed_sign": cfg.hash_config.seed_sign,
            "parallelism": cfg.parallelism,
            "snapshot_every": args.snapshot_every,
            "commute_init": args.commute_init if args.method == "commute" else None,
        },
        "input": {
            "events_path": str(args.events),
            "events_sha256": _sha256(args.events),
            "subset_sha256": _sha256(args.subset),
            "event_count": sum(len(s) for s in segments),
            "snapshot_count": len(segments),
            "node_count": int(g.nodes().size),
            "degree_sum_per_snapshot": degree_sums,
        },
        "subset": sorted(set(subset)),
        "pending_snapshots": pending,
        "output_sha256": _sha256(args.out),
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    manifest_path = args.out.with_name(args.out.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


# ---- check -------------------------------------------------------------------

INVARIANT_LIMIT = 1e-8
PROPERTY_LIMIT = 1e-10
CHECK_TOL = 1e-13


def cmd_check(args) -> int:
    cfg = _run_config(args)
    if cfg.beta != 0.0:
        raise UsageError("the oracle checks assume --beta 0")
    segments = read_event_file(args.events, args.snapshot_every)
    g = GraphState()
    if segments:
        g.apply_events(segments[0])
    final = g.copy()
    for t, seg in enumerate(segments[1:], start=1):
        final.apply_delta(SnapshotDelta(list(seg), t))
    size = int(final.nodes().max()) + 1 if final.nodes().size else 0
    if size > args.oracle_cap:
        raise OracleTooLargeError(f"{size} node ids exceed --oracle-cap {args.oracle_cap}")
    if args.subset is not None:
        subset = read_subset(args.subset)
    else:
        subset = final.nodes().tolist()
    if not subset:
        raise UsageError("event stream has no nodes to check")

    worst = {
        "l1_error": 0.0,
        "entry_error_ratio": 0.0,
        "invariant_deviation": 0.0,
        "fresh_work_ratio": 0.0,
        "symmetry_deviation": 0.0,
        "mass_ratio": 0.0,
    }
    ps = initialize(g, subset, cfg)
    _check_snapshot(ps, worst, set(), args.corrupt_residual)
    seen = {s for s, tn in ps.tracked.items() if tn.initialized}
    for t, seg in enumerate(segments[1:], start=1):
        process_snapshot(ps, SnapshotDelta(list(seg), t))
        _check_snapshot(ps, worst, seen, args.corrupt_residual)
        seen |= {s for s, tn in ps.tracked.items() if tn.initialized}

    rows = [
        ("global_l1_error", worst["l1_error"], cfg.epsilon),
        ("per_entry_error_over_eps_t_degree", worst["entry_error_ratio"], 1.0),
        ("invariant_identity_deviation", worst["invariant_deviation"], INVARIANT_LIMIT),
        ("fresh_push_work_over_bound", worst["fresh_work_ratio"], 1.0),
        ("degree_symmetry_deviation", worst["symmetry_deviation"], PROPERTY_LIMIT),
        ("mass_ratio", worst["mass_ratio"], 1.0 + PROPERTY_LIMIT),
    ]
    failed = False
    lines = ["check\tmeasured\tthreshold\tstatus"]
    for name, value, limit in rows:
        ok = value <= limit
        failed |= not ok
        lines.append(f"{name}\t{value:.6e}\t{limit:.6e}\t{'PASS' if ok else 'FAIL'}")
    lines.append(f"overall\t-\t-\t{'FAIL' if failed else 'PASS'}")
    report = "\n".join(lines) + "\n"
    if args.out is not None:
        args.out.write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _check_snapshot(ps, worst: dict, seen: set[int], corrupt: bool) -> None:
    g = ps.graph
    eps_t = ps.epsilon_log[ps.snapshot]
    alpha = ps.cfg.alpha
    live = [s for s, tn in ps.tracked.items() if tn.initialized and g.degree(s) > 0]
    if live and eps_t is not None:
        exact = exact_ppr_many(g, live, alpha, CHECK_TOL)
        deg = g.degrees().astype(np.float64)
        for j, s in enumerate(live):
            state = ps.tracked[s].ppr
            n = exact.shape[0]
            p = np.zeros(n)
            p[: min(n, state.p.shape[0])] = state.p[:n]
            err = np.abs(p - exact[:, j])
            worst["l1_error"] = max(worst["l1_error"], float(err.sum()))
            has = deg[:n] > 0
            if has.any():
                ratio = float((err[has] / (deg[:n][has] * eps_t)).max())
                worst["entry_error_ratio"] = max(worst["entry_error_ratio"], ratio)
            if s not in seen:
                bound = (1.0 - residual_l1(state)) / (alpha * eps_t)
                worst["fresh_work_ratio"] = max(worst["fresh_work_ratio"], state.work_counter / bound)
    for k, s in enumerate(sorted(ps.tracked)):
        tn = ps.tracked[s]
        if not tn.initialized:
            continue
        r = tn.ppr.r
        if corrupt and k == 0 and eps_t is not None:
            r = r.copy()
            u = s if g.degree(s) > 0 else int(g.active()[0])
            r[u] += 10.0 * eps_t * g.degree(u)
        dev = check_invariant(g, s, tn.ppr.p, r, alpha, CHECK_TOL, cap=max(ALL_PAIRS_CAP, g.num_slots))
        worst["invariant_deviation"] = max(worst["invariant_deviation"], dev)
    if g.degree_sum:
        worst["symmetry_deviation"] = max(
            worst["symmetry_deviation"], check_symmetry(g, alpha, CHECK_TOL, cap=max(ALL_PAIRS_CAP, g.num_slots))
        )
        for t in g.active().tolist():
            worst["mass_ratio"] = max(
                worst["mass_ratio"], check_mass_bound(g, t, alpha, CHECK_TOL, cap=max(ALL_PAIRS_CAP, g.num_slots))
            )


# ---- changes -----------------------------------------------------------------


def cmd_changes(args) -> int:
    table, _ = read_embeddings(args.embeddings)
    snaps = sorted(table)
    if len(snaps) < 2:
        raise UsageError("change detection needs at least two snapshots")
    nodes = sorted(set.intersection(*(set(table[t]) for t in snaps)))
    if args.subset is not None:
        wanted = set(read_subset(args.subset))
        nodes = [u for u in nodes if u in wanted]
    if not nodes:
        raise UsageError("no node appears in every snapshot")

    degrees = None
    min_dd = args.min_degree_delta
    if args.events is not None:
        degrees = _degrees_per_snapshot(args.events, args.snapshot_every, nodes)
        missing = [t for t in snaps if t not in degrees]
        if missing:
            raise UsageError(f"event file has no snapshot {missing[0]}")
        if min_dd is None:
            min_dd = 10
    elif min_dd is not None:
        raise UsageError("--min-degree-delta needs --events to compute degree changes")

    histories = {u: [table[t][u] for t in snaps] for u in nodes}
    records = movement_records(histories, snaps, degrees)
    report = format_report(rank_changes(score_records(records), min_dd))
    if args.out is not None:
        args.out.write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    return EXIT_OK


def _degrees_per_snapshot(path: Path, every: int | None, nodes) -> dict[int, dict[int, int]]:
    segments = read_event_file(path, every)
    g = GraphState()
    out = {}
    for t, seg in enumerate(segments):
        if t == 0:
            g.apply_events(seg)
        else:
            g.apply_delta(SnapshotDelta(list(seg), t))
        out[t] = {u: g.degree(u) for u in nodes}
    return out


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
