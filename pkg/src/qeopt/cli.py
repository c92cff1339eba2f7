"""``qeopt`` command-line front end.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Errors go to
standard error as ``error: <area>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import emulator as em
from . import filters as flt
from . import params as prm
from .benchmark import ExperimentSpec, run_experiment
from .heuristics import HeuristicConfig, WarmStartPool, multistart
from .instances import KINDS, generate_instances
from .io import atomic_write, dumps_json, dumps_text, read_graph
from .problem import ProblemError, graph_diagonal, to_qubo
from .routing import check_circuit, iterate_mapping, layout, merge_swap_zz, metrics_line, route, topology


class UsageError(Exception):
    pass


class CliError(Exception):
    def __init__(self, area: str, msg: str):
        super().__init__(msg)
        self.area = area


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(args, text: str, default_name: str | None = None) -> None:
    """Write to ``--out`` atomically, or to stdout."""
    if args.out:
        out = Path(args.out)
        if out.is_dir() and default_name:
            out = out / default_name
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _load_graph(path):
    if not Path(path).exists():
        raise CliError("input", f"{path} not found")
    try:
        return read_graph(path)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise CliError("input", f"{path}: {exc}") from None


def _heuristic_cfg(args, target=None) -> HeuristicConfig:
    return HeuristicConfig(max_iters=args.max_iters, time_limit=args.time_limit, target=target, seed=args.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> None:
    params = {k: v for k, v in dict(n=args.n, p=args.p, d=args.d, rows=args.rows, cols=args.cols, n_swap=args.n_swap).items() if v is not None}
    if args.weights:
        params["weights"] = args.weights
    if args.defect:
        params["defect"] = [int(x) for x in args.defect.split(",")]
    try:
        g = generate_instances(args.kind, params, args.seed)
    except KeyError as exc:
        raise UsageError(f"gen --kind {args.kind} needs --{str(exc).strip(chr(39))}") from None
    _emit(args, dumps_json(g) if args.format == "json" else dumps_text(g), f"{args.kind}.{'json' if args.format == 'json' else 'txt'}")


def _angles(args, g, diag) -> em.QaoaParams:
    if args.angles:
        par = em.QaoaParams.parse(args.angles)
        if par.p != args.p:
            raise CliError("angles", f"--angles has {par.p} layers, --p is {args.p}")
        return par
    if args.method == "optimize":
        return em.optimize_params(diag, args.p, seed=args.seed)[0]
    return prm.predict(g, args.p, args.method, prm.load_tables())


def cmd_predict(args) -> None:
    g = _load_graph(args.graph)
    par = prm.predict(g, args.p, args.method, prm.load_tables(), args.alpha)
    if args.format == "json":
        _emit(args, json.dumps(par.to_dict(), indent=1) + "\n")
    else:
        _emit(args, ",".join(repr(float(v)) for pair in zip(par.gammas, par.betas) for v in pair) + "\n")


def cmd_emulate(args) -> None:
    g = _load_graph(args.graph)
    diag = graph_diagonal(g, args.problem, args.lam)
    if args.method is None and not args.angles:
        args.method = "mis" if args.problem == "mis" else "balanced"
    par = _angles(args, g, diag)
    state = em.qaoa_state(diag, par)
    energy = em.expectation(state, diag)
    s = em.sample(state, args.shots, args.seed)
    print(f"p={par.p} energy={energy:.10g} ar_star={em.ar_star(energy, diag):.10g}", file=sys.stderr)
    _emit(args, s.dumps_json() if args.format == "json" else s.dumps_text(), "samples.txt")


def cmd_route(args) -> None:
    g = _load_graph(args.graph)
    h = topology(args.topology)
    m0 = layout(args.layout, g, h, args.seed)

    def router(graph, hw, m):
        kw = {"beam_limit": args.beam} if args.method == "astar" and args.beam else {}
        c = route(graph, hw, m, args.method, args.q, **kw)
        return merge_swap_zz(c) if args.merge else c

    _, c = iterate_mapping(g, h, router, args.iterations, m0)
    check_circuit(c, g, h)
    line = metrics_line(c)
    if args.out:
        _emit(args, c.dumps(), "circuit.json")
        print(line)
    else:
        sys.stdout.write(c.dumps())
        print(line)


def cmd_filter(args) -> None:
    if not Path(args.samples).exists():
        raise CliError("input", f"{args.samples} not found")
    s = em.SampleSet.read(args.samples)
    cfg = flt.FilterConfig.read(args.config) if args.config else flt.FilterConfig()
    q = to_qubo(_load_graph(args.graph), args.problem, args.lam) if args.graph else None
    model = None
    if args.kind == "readout":
        if not args.readout:
            raise CliError("filter", "readout correction needs --readout MODEL.json")
        model = flt.ReadoutModel.loads(Path(args.readout).read_text())
    out = flt.apply_filter(args.kind, s, q, cfg, model)
    _emit(args, out.dumps_json() if args.format == "json" else out.dumps_text(), "filtered.txt")


def cmd_solve(args) -> None:
    g = _load_graph(args.graph)
    q = to_qubo(g, args.problem, args.lam)
    target = None
    if args.target is not None:
        target = args.target
    elif q.n <= 26 and args.exact:
        target = graph_diagonal(g, args.problem, args.lam).lambda_min
    if args.warmstart == "random":
        pool = WarmStartPool.random(q.n)
    else:
        if not Path(args.warmstart).exists():
            raise CliError("input", f"{args.warmstart} not found")
        pool = WarmStartPool.from_samples(em.SampleSet.read(args.warmstart), args.seed, source="file")
    trace = multistart(q, pool, args.restarts, _heuristic_cfg(args, target))
    print(f"best_cost={trace.best_cost():.10g} restarts={trace.restarts}", file=sys.stderr)
    _emit(args, trace.dumps_json() if args.format == "json" else trace.dumps_csv(), "trace.csv")


def cmd_solve_large(args) -> None:
    from .pipeline import solve_large

    g = _load_graph(args.graph)
    cfg = HeuristicConfig(max_iters=args.max_iters, seed=args.seed)
    res = solve_large(g, args.max_block, args.p, args.problem, args.lam, args.seed, shots=args.shots, chain=args.filter, restarts=args.restarts, cfg=cfg)
    if args.blocks_out:
        bdir = Path(args.blocks_out)
        atomic_write(bdir / "partition.json", res.partition.dumps())
        for b, r in enumerate(res.blocks):
            if r is not None:
                atomic_write(bdir / f"block_{b}_samples.txt", r.samples.dumps_text())
    q = to_qubo(g, args.problem, args.lam)
    doc = {
        "assignment": "".join(str(int(v)) for v in res.x),
        "objective": float(q.sign * res.energy),
        "naive_objective": float(q.sign * res.naive_energy),
        "blocks": res.partition.blocks,
        "cut_edges": len(res.partition.cut_edges),
    }
    if args.format == "json":
        _emit(args, json.dumps(doc, indent=1) + "\n", "solution.json")
    else:
        _emit(args, "assignment,objective,naive_objective,blocks,cut_edges\n" + ",".join(str(doc[k]) for k in doc) + "\n", "solution.csv")


def cmd_bench(args) -> None:
    try:
        spec = ExperimentSpec.read(args.spec)
    except (ProblemError, TypeError) as exc:
        raise CliError("spec", str(exc)) from None
    if not args.out:
        raise CliError("bench", "--out DIR is required")
    res = run_experiment(spec, args.out, args.jobs)
    for r in res.reports:
        print(f"{r.instance} p={r.p} filter={r.filter} Q={'undefined' if r.Q is None else f'{r.Q:.4g}'}")
    if res.errors:
        print(f"{len(res.errors)} cell(s) failed; see errors.json", file=sys.stderr)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--out", help="output file or directory (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="csv selects the line-oriented text forms")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for independent cells")

    problem = _Parser(add_help=False)
    problem.add_argument("--graph", required=True, help="instance file (text or .json)")
    problem.add_argument("--problem", choices=("maxcut", "mis"), default="maxcut")
    problem.add_argument("--lam", type=float, default=1.0, help="MIS penalty")

    ap = _Parser(prog="qeopt", description="Warm-started classical optimization from emulated QAOA samples.")
    sub = ap.add_subparsers(dest="cmd", parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a benchmark graph")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float, help="edge probability")
    p.add_argument("--d", type=int, help="degree")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--defect", help="row,col of the removed vertex")
    p.add_argument("--n-swap", dest="n_swap", type=int)
    p.add_argument("--weights", help="unit, uniform or signs")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("predict", parents=[common, problem], help="print predicted angles")
    p.add_argument("--method", choices=prm.METHODS, default="balanced")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--alpha", type=float, default=prm.DEFAULT_ALPHA)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("emulate", parents=[common, problem], help="emulate QAOA and sample")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--angles", help="gamma1,beta1,gamma2,beta2,...")
    p.add_argument("--method", choices=prm.METHODS + ("optimize",))
    p.add_argument("--shots", type=int, default=1000)
    p.set_defaults(fn=cmd_emulate)

    p = sub.add_parser("route", parents=[common], help="route one cost layer onto hardware")
    p.add_argument("--graph", required=True)
    p.add_argument("--topology", required=True, help="grid:RxC, heavyhex:156, path:Q or file:PATH")
    p.add_argument("--method", choices=("greedy", "astar"), default="greedy")
    p.add_argument("--layout", choices=("fiedler", "qap", "random"), default="qap")
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--q", type=float, default=1.0, help="distance exponent")
    p.add_argument("--beam", type=int, help="A* expansion limit")
    p.add_argument("--no-merge", dest="merge", action="store_false", help="keep swaps and interactions separate")
    p.set_defaults(fn=cmd_route)

    p = sub.add_parser("filter", parents=[common], help="filter or correct a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--kind", choices=flt.KINDS, required=True)
    p.add_argument("--config", help="FilterConfig JSON")
    p.add_argument("--graph", help="instance, needed by energy and hamming")
    p.add_argument("--problem", choices=("maxcut", "mis"), default="maxcut")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--readout", help="ReadoutModel JSON")
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("solve", parents=[common, problem], help="multistart tabu search")
    p.add_argument("--heuristic", choices=("tabu",), default="tabu")
    p.add_argument("--warmstart", default="random", help="sample file or 'random'")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p.add_argument("--time-limit", dest="time_limit", type=float)
    p.add_argument("--target", type=float, help="stop a restart at this energy")
    p.add_argument("--exact", action="store_true", help="compute the optimum by enumeration and stop on it")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("solve-large", parents=[common, problem], help="partition, solve blocks, recombine")
    p.add_argument("--max-block", dest="max_block", type=int, required=True)
    p.add_argument("--blocks-out", dest="blocks_out")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--filter", default="none", help="filter chain such as energy or energy+hamming")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
    p.set_defaults(fn=cmd_solve_large)

    p = sub.add_parser("bench", parents=[common], help="run a cold-versus-warm experiment")
    p.add_argument("--spec", required=True)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.cmd is None:
            raise UsageError("a subcommand is required")
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    try:
        args.fn(args)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except CliError as exc:
        print(f"error: {exc.area}: {exc}", file=sys.stderr)
        return 2
    except (ProblemError, OSError, ValueError, KeyError) as exc:
        print(f"error: {args.cmd}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
