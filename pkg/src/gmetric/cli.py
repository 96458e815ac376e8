"""Command-line front end: ``gmetric <command> [options]``.

Exit codes: 0 success, 2 input error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .graphs import (MODELS, GraphSet, GraphSetError, generate_graph, graph_set_to_dict,
                     load_graph_set, random_graph)
from .linalg import ConvergenceError, NormKind, as_norm
from .metriclab import (PAIRWISE, check_n_metric_axioms, estimate_c_constant, estimate_diameter,
                        get_distance)
from .multidist import METHODS, multidistance
from .pscore import CapExceededError, sb_distance_exact
from .relax import SolverConfig, solve_pair

SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None
    method: str | None
    norm: NormKind
    solver: SolverConfig
    output: str | None
    seed: int


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; encode them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(_clean(payload), sort_keys=True, indent=2, default=_json_default) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path: str | None) -> GraphSet:
    if not path:
        raise InputError("--input is required")
    try:
        return load_graph_set(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (GraphSetError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _config(args) -> RunConfig:
    try:
        norm = as_norm(args.norm)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    kw = {"seed": args.seed}
    if getattr(args, "max_iter", None) is not None:
        kw["max_iter"] = args.max_iter
    if getattr(args, "rho", None) is not None:
        kw["rho"] = args.rho
    if getattr(args, "solver_tol", None) is not None:
        kw["tol_primal"] = kw["tol_dual"] = args.solver_tol
    try:
        solver = SolverConfig(**kw)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return RunConfig(args.command, getattr(args, "input", None), getattr(args, "method", None),
                     norm, solver, args.output, args.seed)


def _parse_pair(text: str, n: int) -> tuple[int, int]:
    try:
        i, j = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad --pair {text!r}, expected i,j") from exc
    if not (0 <= i < n and 0 <= j < n):
        raise InputError(f"pair index out of range for {n} graphs")
    return i, j


def cmd_dist(args, cfg: RunConfig) -> dict:
    gs = _load(cfg.input)
    i, j = _parse_pair(args.pair, gs.n)
    A, B = gs[i], gs[j]
    if args.method == "exact":
        try:
            value, P = sb_distance_exact(A, B, norm=cfg.norm)
        except CapExceededError as exc:
            raise InputError(str(exc)) from exc
        out = {"value": value, "alignment": P.matrix, "kind": P.kind}
    else:
        res = solve_pair(A, B, None, cfg.norm, cfg.solver)
        out = {"value": res.value, "alignment": res.blocks[0, 1].matrix,
               "kind": "doubly_stochastic", "diagnostics": res.diagnostics()}
        if not res.converged:
            out["_exit"] = EXIT_SOLVER
    return out | {"pair": [i, j]}


def cmd_multidist(args, cfg: RunConfig) -> dict:
    gs = _load(cfg.input)
    try:
        res = multidistance(cfg.method, gs, cfg.norm, cfg.solver)
    except CapExceededError as exc:
        raise InputError(str(exc)) from exc
    out = res.to_dict()
    if not out.get("diagnostics", {}).get("converged", True):
        out["_exit"] = EXIT_SOLVER
    return out


def _pool(cfg: RunConfig):
    return None if cfg.input is None else list(_load(cfg.input).graphs)


def cmd_props(args, cfg: RunConfig) -> dict:
    pool = _pool(cfg)
    report = check_n_metric_axioms(cfg.method, args.n, args.m, args.trials, cfg.seed,
                                   args.tol, args.jobs, pool)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "property", "lhs", "rhs", "margin"])
            w.writerows(report.violations)
    return report.to_dict()


def cmd_cprop(args, cfg: RunConfig) -> dict:
    est = estimate_c_constant(cfg.method, args.n, args.m, args.trials, cfg.seed, args.jobs, _pool(cfg))
    return est.to_dict()


def cmd_diameter(args, cfg: RunConfig) -> dict:
    gs = _load(cfg.input)
    if gs.n < 2:
        raise InputError("need at least two graphs")
    return estimate_diameter(gs, cfg.method, args.budget, cfg.seed).to_dict()


def cmd_gen(args, cfg: RunConfig) -> dict:
    params = {}
    for item in args.param or []:
        key, _, val = item.partition("=")
        try:
            params[key] = float(val) if any(c in val for c in ".e") else int(val)
        except ValueError as exc:
            raise InputError(f"bad --param {item!r}") from exc
    ss = np.random.SeedSequence(cfg.seed).spawn(args.count)
    graphs = []
    for s in ss:
        if args.model == "mixed":
            graphs.append(random_graph(np.random.default_rng(s), args.m))
        else:
            seed = int(s.generate_state(1)[0])
            graphs.append(generate_graph(args.model, args.m, params, seed))
    return graph_set_to_dict(GraphSet(graphs))


COMMANDS = {"dist": cmd_dist, "multidist": cmd_multidist, "props": cmd_props,
            "cprop": cmd_cprop, "diameter": cmd_diameter, "gen": cmd_gen}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmetric", description="Multi-graph n-metric distances.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, method_default=None, method_choices=None):
        p.add_argument("--input")
        p.add_argument("--output")
        p.add_argument("--norm", default="frobenius", help="frobenius | operator2 | p:<val>")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--timing", action="store_true", help="add wall time (breaks byte determinism)")
        if method_choices is not None:
            p.add_argument("--method", default=method_default, choices=method_choices)

    def solver(p):
        p.add_argument("--max-iter", type=int)
        p.add_argument("--rho", type=float)
        p.add_argument("--solver-tol", type=float)

    ids = list(METHODS)
    p = sub.add_parser("dist", help="pairwise SB-distance")
    common(p, "exact", ["exact", "relaxed"])
    p.add_argument("--pair", default="0,1")
    solver(p)

    p = sub.add_parser("multidist", help="multi-distance of the whole set")
    common(p, "galign-spectral", ids)
    solver(p)

    for name in ("props", "cprop"):
        p = sub.add_parser(name, help="axiom suite" if name == "props" else "(C,n)-constant estimate")
        common(p, "galign-spectral", ids)
        p.add_argument("--n", type=int, default=3)
        p.add_argument("--m", type=int, default=4)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--jobs", type=int, default=1)
        if name == "props":
            p.add_argument("--tol", type=float)
            p.add_argument("--csv")

    p = sub.add_parser("diameter", help="sampled diameter estimate")
    common(p, "spectral", list(PAIRWISE))
    p.add_argument("--budget", type=int)

    p = sub.add_parser("gen", help="write a generated graph set")
    common(p)
    p.add_argument("--model", default="mixed", choices=["mixed", *MODELS])
    p.add_argument("--m", type=int, default=6)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--param", action="append", help="model parameter key=value")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    t0 = time.perf_counter()
    try:
        cfg = _config(args)
        if cfg.method is not None and args.command in ("props", "cprop"):
            get_distance(cfg.method)
        out = COMMANDS[args.command](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, GraphSetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    code = out.pop("_exit", EXIT_OK) if isinstance(out, dict) else EXIT_OK
    payload = {"schema": SCHEMA, "command": args.command}
    if args.command != "gen":
        payload |= {"method": cfg.method, "norm": str(cfg.norm), "seed": cfg.seed, "result": out}
    else:
        payload |= out
    if args.timing:
        payload["timing"] = time.perf_counter() - t0
    try:
        _emit(payload, cfg.output)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
