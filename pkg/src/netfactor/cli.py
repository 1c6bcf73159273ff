"""Command-line front end.

Exit codes: 0 success, 1 clean negative result, 2 input or usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .network import INSTANCE_NAMES, NetworkError, canonical_instance, load_network, network_to_dict, validate
from .rank import (RankError, fooling_set_lower_bound, forced_row_combination, nonneg_rank_bounds,
                   numerical_rank)
from .search import (SearchConfig, als_search, format_restart_table, square_cross_reduced_search,
                     square_cross_task)
from .slocc import BUILTIN_PROTOCOLS, ProtocolError, builtin_protocol, fidelity, load_protocol, run_protocol
from .tasks import TaskError, cross_pairs_task, load_task, subset_state_task, typewriter_matrix, typewriter_task
from .tensor import Domain, TensorError
from .verify import AssignmentError, bundled_assignment, load_assignment, verify_assignment

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2

INPUT_ERRORS = (NetworkError, TaskError, AssignmentError, TensorError, RankError, ProtocolError,
                OSError, json.JSONDecodeError, KeyError, ValueError)


class UsageError(ValueError):
    pass


def _default_seed() -> int:
    raw = os.environ.get("NETFACTOR_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"NETFACTOR_SEED must be an integer, got {raw!r}")


# builtin name -> (network, task, assignment) factories; any may be None
def _verify_builtins():
    return {
        "butterfly": (lambda: canonical_instance("butterfly"),
                      lambda: cross_pairs_task([("S1", "T1"), ("S2", "T2")]),
                      lambda: bundled_assignment("butterfly-xor")),
        "star-ghz": (lambda: canonical_instance("star", n=3, d=2),
                     lambda: subset_state_task("ghz", 3, 2),
                     lambda: bundled_assignment("star-ghz")),
        "ternary-cross": (lambda: canonical_instance("ternary-square"),
                           lambda: cross_pairs_task([("a", "d"), ("b", "c")], 2, Domain.COMPLEX),
                           lambda: bundled_assignment("ternary-square-cross")),
    }


def _search_builtins():
    return {
        "typewriter": (lambda: canonical_instance("single-edge", d=3, client_dim=4), typewriter_task),
        "square-cross": (lambda: canonical_instance("square", d_internal=2, d_client=2), square_cross_task),
        "butterfly": (lambda: canonical_instance("butterfly"),
                      lambda: cross_pairs_task([("S1", "T1"), ("S2", "T2")])),
    }


def _analyze_builtins():
    return {"typewriter": typewriter_matrix, "identity4": lambda: np.eye(4)}


def _pick(name, table, kind):
    if name not in table:
        raise UsageError(f"unknown {kind} builtin {name!r}; choose from {sorted(table)}")
    return table[name]


def _network_and_task(args, builtins):
    net = task = None
    if args.builtin:
        entry = _pick(args.builtin, builtins, args.command)
        net, task = entry[0](), entry[1]()
    if args.network:
        net = load_network(args.network)
    if args.task:
        task = load_task(args.task)
    if net is None or task is None:
        raise UsageError("need a network and a task (files or --builtin)")
    dims = net.client_dims()
    for c, d in task.dims.items():
        if c not in dims:
            raise UsageError(f"task client {c!r} is not a network client")
        if dims[c] != d:
            raise UsageError(f"task client {c!r} has dim {d}, network client edge has dim {dims[c]}")
    if sorted(dims) != sorted(task.dims):
        raise UsageError(f"task clients {sorted(task.dims)} differ from network clients {sorted(dims)}")
    return net, task


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_instances(args) -> int:
    if not args.name:
        _emit(args, "\n".join(INSTANCE_NAMES))
        return EXIT_OK
    params = {}
    for p in args.param or []:
        k, _, v = p.partition("=")
        if not v:
            raise UsageError(f"--param expects key=value, got {p!r}")
        params[k] = int(v)
    net = canonical_instance(args.name, **params)
    doc = network_to_dict(net)
    doc["name"] = net.name
    _emit(args, json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    net, task = _network_and_task(args, _verify_builtins())
    if args.assignment:
        assignment = load_assignment(args.assignment, net)
    elif args.builtin:
        assignment = _pick(args.builtin, _verify_builtins(), "verify")[2]()
    else:
        raise UsageError("need an assignment (file or --builtin)")
    rep = validate(net)
    if not rep.ok:
        raise UsageError("; ".join(rep.violations))
    report = verify_assignment(net, task, assignment, args.tol)
    lines = [f"network: {net.name or '(file)'}", f"task clients: {' '.join(task.client_ids)}",
             f"domain: {task.domain.value}", f"tolerance: {args.tol:.3e}", report.summary()]
    _emit(args, "\n".join(lines))
    return EXIT_OK if report.matched else EXIT_NEGATIVE


def cmd_search(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    config = SearchConfig(restarts=args.restarts, max_sweeps=args.max_sweeps, seed=seed,
                          success_tol=args.tol, threads=args.threads)
    if args.reduced:
        if args.builtin != "square-cross" or args.network or args.task:
            raise UsageError("--reduced applies only to --builtin square-cross")
        if Domain.parse(args.domain) is not Domain.COMPLEX:
            raise UsageError("the reduced search is over complex parameters")
        result = square_cross_reduced_search(config)
        header = ["network: square(2,2)", "task: cross pairs (a,c) (b,d)", "method: reduced 15-parameter descent"]
    else:
        net, task = _network_and_task(args, _search_builtins())
        domain = Domain.parse(args.domain)
        if domain is Domain.NONNEG and task.domain is not Domain.NONNEG:
            raise UsageError("non-negative search needs a non-negative task")
        result = als_search(net, task, domain, config)
        header = [f"network: {net.name or '(file)'}", f"task clients: {' '.join(task.client_ids)}",
                  f"method: alternating least squares ({domain.value})"]
    header += [f"seed: {seed}", f"restarts: {config.restarts}", f"success tolerance: {config.success_tol:.3e}",
               f"best residual: {result.best_residual:.12e}", f"best restart: {result.best_restart}",
               result.verdict()]
    _emit(args, "\n".join(header) + "\n\n" + format_restart_table(result))
    return EXIT_OK if result.hit else EXIT_NEGATIVE


def _load_matrix(path) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    rows = doc["matrix"] if isinstance(doc, dict) else doc
    m = np.asarray(rows, dtype=float)
    if m.ndim != 2:
        raise UsageError("matrix document must hold a list of equal-length rows")
    return m


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def cmd_analyze(args) -> int:
    if args.matrix:
        m = _load_matrix(args.matrix)
    elif args.builtin:
        m = np.asarray(_pick(args.builtin, _analyze_builtins(), "analyze")(), dtype=float)
    else:
        raise UsageError("need --matrix or --builtin")
    rank = numerical_rank(m, args.rank_tol)
    lines = [f"shape: {m.shape[0]}x{m.shape[1]}", f"rank: {rank.rank} (relative tolerance {args.rank_tol:.1e})",
             "singular values: " + " ".join(f"{s:.12e}" for s in rank.singular_values)]
    if m.shape[0] == 4:
        try:
            fc = forced_row_combination(m)
        except RankError:
            lines.append("forced row combination: row 4 is outside the span of rows 1-3")
        else:
            if fc.dependent:
                lines.append("forced row combination: rows 1-3 dependent")
            else:
                lines.append(f"forced row combination: lambda={_fmt(fc.lam)} mu={_fmt(fc.mu)} nu={_fmt(fc.nu)}"
                             + (" (negative coefficient)" if fc.has_negative else ""))
    if not args.no_nonneg:
        if np.any(m < 0):
            raise RankError("matrix has negative entries; non-negative analysis refused")
        seed = args.seed if args.seed is not None else _default_seed()
        fool = fooling_set_lower_bound(m)
        lines.append(f"fooling set: size {fool.size}: " + " ".join(f"({i},{j})" for i, j in fool.witness))
        bounds = nonneg_rank_bounds(m, SearchConfig(restarts=args.restarts, seed=seed, success_tol=args.tol,
                                                    threads=args.threads))
        lines.append(bounds.summary())
    _emit(args, "\n".join(lines))
    return EXIT_OK


def cmd_simulate(args) -> int:
    target = None
    if args.builtin:
        if args.builtin not in BUILTIN_PROTOCOLS:
            raise UsageError(f"unknown simulate builtin {args.builtin!r}; choose from {sorted(BUILTIN_PROTOCOLS)}")
        net, steps, initial = builtin_protocol(args.builtin)
        if args.builtin == "ternary-cross":
            target = cross_pairs_task([("a", "d"), ("b", "c")], 2, Domain.COMPLEX)
    else:
        if not (args.network and args.protocol):
            raise UsageError("need --network and --protocol, or --builtin")
        net = None
    if args.network:
        net = load_network(args.network)
    if args.protocol:
        steps, initial = load_protocol(args.protocol)
    if args.task:
        target = load_task(args.task)
    branches = run_protocol(net, steps, initial=initial)
    total = sum(b.probability for b in branches)
    lines = [f"network: {net.name or '(file)'}", f"steps: {len(steps)}", f"branches: {len(branches)}",
             f"total probability: {total:.12f}"]
    norms = {}
    for b in branches:
        norms.update(b.normalizations)
    for k, f in norms.items():
        lines.append(f"measurement {k}: operators scaled by {f:.12f}")
    ok = True
    for b in branches:
        line = f"branch {b.record()}: probability {b.probability:.12f}"
        if target is not None:
            fid = fidelity(b.state, target)
            ok &= fid >= args.threshold
            line += f" fidelity {fid:.15f}"
        lines.append(line)
    if target is not None:
        lines.append(f"fidelity threshold {args.threshold:.12g}: {'met' if ok else 'NOT met'}")
    _emit(args, "\n".join(lines))
    return EXIT_OK if ok else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netfactor", description="Network coding feasibility by tensor factorization.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, builtin=True):
        sp.add_argument("--out", help="write the report here instead of stdout")
        if builtin:
            sp.add_argument("--builtin", help="use a bundled instance")

    sp = sub.add_parser("instances", help="list canonical instances or emit one as JSON")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--param", action="append", help="instance parameter key=value (repeatable)")
    common(sp, builtin=False)

    sp = sub.add_parser("verify", help="check an assignment against a task")
    sp.add_argument("--network")
    sp.add_argument("--task")
    sp.add_argument("--assignment")
    sp.add_argument("--tol", type=float, default=1e-8)
    common(sp)

    sp = sub.add_parser("search", help="multi-start search for an assignment")
    sp.add_argument("--network")
    sp.add_argument("--task")
    sp.add_argument("--domain", default="complex")
    sp.add_argument("--restarts", type=int, default=100)
    sp.add_argument("--max-sweeps", type=int, default=2000)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-6, help="success tolerance on the residual")
    sp.add_argument("--reduced", action="store_true", help="15-parameter search on the square cross task")
    common(sp)

    sp = sub.add_parser("analyze", help="rank, fooling set and non-negative rank bounds of a matrix")
    sp.add_argument("--matrix", help='JSON file {"matrix": [[...], ...]}')
    sp.add_argument("--rank-tol", type=float, default=1e-9)
    sp.add_argument("--no-nonneg", action="store_true", help="skip the non-negative analysis")
    sp.add_argument("--restarts", type=int, default=50)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--tol", type=float, default=1e-6)
    common(sp)

    sp = sub.add_parser("simulate", help="run a protocol branch by branch")
    sp.add_argument("--network")
    sp.add_argument("--protocol")
    sp.add_argument("--task", help="target task for fidelity reports")
    sp.add_argument("--threshold", type=float, default=1 - 1e-9)
    common(sp)
    return p


COMMANDS = {"instances": cmd_instances, "verify": cmd_verify, "search": cmd_search,
            "analyze": cmd_analyze, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (UsageError, *INPUT_ERRORS) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
