"""Command-line entry point.

Exit status is 0 on success, 1 when a verification check fails and 2 on
usage, input or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .augment import Mode, apply_plan, gumbel_sample, optimize_plan, read_plan_json, spectral_change_loss
from .augment import uniform_plan, write_plan_json
from .community import community_change_ratio, normalized_cut, spectral_clustering
from .generators import RpgParams, generate_er, generate_rpg
from .io import format_edge_list, read_graph, write_assignment_json, write_graph_json
from .verify import SUITES, load_experiment_config, experiment, metrics_csv, run_verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _write_graph(g, out):
    if out is None:
        write_graph_json(g, sys.stdout)
    elif Path(out).suffix.lower() == ".json":
        write_graph_json(g, out)
    else:
        Path(out).write_text(format_edge_list(g))


def cmd_gen(args) -> int:
    if args.kind == "rpg":
        g = generate_rpg(RpgParams(args.num_class, args.nodes_per_class, args.homophily, args.avg_degree, args.seed))
    else:
        g = generate_er(args.n, args.p, args.seed)
    _write_graph(g, args.out)
    return EXIT_OK


def cmd_augment(args) -> int:
    g = read_graph(args.graph)
    mode = Mode(args.mode)
    if args.strategy == "uniform":
        plan = uniform_plan(g, mode, args.budget)
    else:
        plan = optimize_plan(g, mode, args.budget, args.k, args.eta, args.iterations, seed=args.seed)
    loss = spectral_change_loss(g, plan, args.k)
    if args.out:
        write_plan_json(plan, args.out)
    else:
        write_plan_json(plan, sys.stdout)
    print(f"{mode.value}: {len(plan)} support entries, sum={plan.values.sum():.6g}, loss={loss:.6g}", file=sys.stderr)
    return EXIT_OK


def cmd_sample(args) -> int:
    g = read_graph(args.graph)
    plan = read_plan_json(args.plan)
    mask = gumbel_sample(plan.values, args.tau, args.seed)
    view = apply_plan(g, plan, mask, seed=args.seed)
    _write_graph(view.graph, args.out)
    print(f"{plan.mode.value}: flipped {int(mask.sum())} of {len(mask)}", file=sys.stderr)
    return EXIT_OK


def cmd_eval_community(args) -> int:
    g = read_graph(args.graph)
    before = spectral_clustering(g, args.k, seed=args.seed)
    result = {"normalized_cut": normalized_cut(g, before)}
    if args.view:
        view = read_graph(args.view)
        after = spectral_clustering(view, args.k, seed=args.seed)
        result["community_change"] = community_change_ratio(before, after)
    if args.out:
        write_assignment_json(before, args.out)
    print(json.dumps(result))
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verify(args.suite, args.seed)
    print("\n".join(report.lines()))
    return EXIT_OK if report.overall else EXIT_FAIL


def cmd_experiment(args) -> int:
    cfg = load_experiment_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, pipeline=replace(cfg.pipeline, seed=args.seed))
    summary = experiment(cfg)
    text = metrics_csv(summary.rows) + "\n".join(summary.lines()) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    print("\n".join(summary.lines()), file=sys.stderr)
    return EXIT_OK


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ciaug", description="Community-invariant spectral graph augmentation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random graph")
    p.add_argument("kind", choices=("rpg", "er"))
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", help="output path (.json or edge list); stdout if omitted")
    p.add_argument("--num-class", type=int, default=8)
    p.add_argument("--nodes-per-class", type=int, default=30)
    p.add_argument("--homophily", type=float, default=0.96)
    p.add_argument("--avg-degree", type=float, default=5.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=float, default=0.05)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("augment", help="optimize a perturbation plan for one graph and mode")
    p.add_argument("--graph", required=True)
    p.add_argument("--mode", required=True, choices=[m.value for m in Mode])
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--iterations", type=_nonneg_int, default=20)
    p.add_argument("--strategy", choices=("ci", "uniform"), default="ci")
    p.add_argument("--out")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("sample", help="sample a view from a plan")
    p.add_argument("--graph", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval-community", help="cluster a graph and compare with a view")
    p.add_argument("--graph", required=True)
    p.add_argument("--view")
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--out", help="write the graph's assignment as JSON")
    p.set_defaults(func=cmd_eval_community)

    p = sub.add_parser("verify", help="run the numerical self-checks")
    p.add_argument("--suite", choices=SUITES, default="all")
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("experiment", help="run the community-preservation experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=_nonneg_int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
