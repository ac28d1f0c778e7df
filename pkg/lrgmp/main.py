# lrgmp - Entry point
# AGPL-3.0-or-later
#
# Launch: lrgmp <command> ...      (after pip install)
#         python -m lrgmp.main ...
#         python main.py ...       (from project root)
#
# Commands: gen | verify | gradcheck | train | perturb | sweep | report
# Exit codes: 0 ok / pass, 1 verification failure, 2 usage or config error.

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from lrgmp.compute import backend_label
from lrgmp.config import (
    EQUIV_SIZE_RANGE, EQUIV_TOL, EQUIV_TRIALS, EXIT_FAIL, EXIT_OK, EXIT_USAGE,
    FIXTURE_BLOCKS, FIXTURE_P_IN, FIXTURE_P_OUT, GRADCHECK_CONFIGS, LOG_FORMAT,
    SBM_DV, SBM_NOISE, SBM_SHIFT,
)
from lrgmp.conformance import oracle
from lrgmp.errors import ConfigError, LrgmpError
from lrgmp.graph.generator import sbm_generate
from lrgmp.graph.perturb import random_flip, targeted_flip
from lrgmp.harness import report as rpt
from lrgmp.harness.experiment import (
    ExperimentConfig, append_results_csv, load_experiment_json, run_experiment, write_metrics,
)
from lrgmp.harness.fixture import separable_backbone, separable_graph
from lrgmp.harness.sweep import SweepAxes, expand_noise, run_sweep
from lrgmp.io.exporter import dumps, save_backbone_json, save_graph_json, write_json
from lrgmp.io.importer import load_gdp_json, load_graph_json
from lrgmp.linalg.dense import make_rng
from lrgmp.optimize import gradcheck

log = logging.getLogger("lrgmp")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------

def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _words(text: str) -> tuple[str, ...]:
    return tuple(x for x in text.split(",") if x)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _experiment_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="experiment JSON; flags below override it")
    g.add_argument("--dataset", help="fixture | sbm:<blocks>[:p_in:p_out] | graph JSON")
    g.add_argument("--backbone", help="fixture | init:<kind>:<dims> | backbone JSON")
    g.add_argument("--method", help="lr_gmp | cond_lr_gmp | none | a data prompt kind")
    g.add_argument("--data-seed", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--epochs", type=int)
    g.add_argument("--optimizer", choices=("adam", "sgd"))
    g.add_argument("--tau", type=float)
    g.add_argument("--k", type=int, help="basis vectors / prompt nodes for data prompts")
    g.add_argument("--timing", action="store_true", help="record wall_time_ms")
    g.add_argument("--results", help="append result rows to this CSV")


def _base_experiment(args) -> ExperimentConfig:
    config = load_experiment_json(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("dataset", "backbone", "method", "data_seed")
                 if getattr(args, k) is not None}
    train = {k: getattr(args, k) for k in ("lr", "epochs", "optimizer", "tau", "k")
             if getattr(args, k) is not None}
    for name in ("r", "shots"):
        value = getattr(args, name, None)
        if isinstance(value, int):
            train[name] = value
    placement = getattr(args, "placement", None)
    if isinstance(placement, str):
        train["placement"] = placement
    noise = getattr(args, "noise", None)
    if isinstance(noise, str):
        overrides["noise"] = noise
    return replace(config, train=replace(config.train, **train), **overrides)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.fixture:
        graph = separable_graph(args.seed)
    else:
        blocks = args.sbm or FIXTURE_BLOCKS
        graph = sbm_generate(make_rng(args.seed), blocks, args.p_in, args.p_out,
                             args.d_v, args.shift, args.noise_std)
    save_graph_json(graph, args.out)
    log.info("gen: wrote %s (%d nodes, %d edges, seed %d)", args.out, graph.num_nodes,
             graph.num_edges, args.seed)
    if args.backbone_out:
        save_backbone_json(separable_backbone(), args.backbone_out)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.gdp or args.graph:
        if not (args.gdp and args.graph):
            raise ConfigError("--gdp and --graph must be given together")
        graph, _ = load_graph_json(args.graph)
        spec = load_gdp_json(args.gdp)
        result = oracle.check_instance(graph, spec, args.mutant)
        doc = oracle.instance_document(spec, result, args.tol, args.mutant)
        _emit(dumps(doc), args.out)
        return EXIT_OK if doc["pass"] else EXIT_FAIL
    if args.seed is None:
        raise ConfigError("verify over random instances needs --seed")
    size_range = (EQUIV_SIZE_RANGE[0], args.max_nodes)
    if args.prop is None:
        reports = oracle.verify_all(args.trials, args.seed, args.tol, size_range, args.mutant)
    else:
        reports = [oracle.verify_proposition(args.prop, args.trials, size_range, args.tol,
                                             args.seed, args.mutant)]
    doc = oracle.reports_document(reports)
    _emit(dumps(doc), args.out)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


def cmd_gradcheck(args) -> int:
    reports = gradcheck.run_gradcheck(args.configs, args.seed, args.kinds, args.mutant)
    sys.stdout.write(gradcheck.format_table(reports))
    doc = gradcheck.reports_document(reports)
    if args.json:
        write_json(doc, args.json)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


def cmd_train(args) -> int:
    config = _base_experiment(args).validate()
    row, metrics = run_experiment(config, args.seed, args.timing)
    if args.metrics:
        write_metrics(metrics, args.metrics)
    if args.results:
        append_results_csv([row], args.results)
    sys.stdout.write(
        f"{row.method} {row.dataset} seed={row.seed} r={row.r} placement={row.placement} "
        f"shots={row.shots} noise={row.noise}: val {row.val_acc:.4f} test {row.test_acc:.4f} "
        f"(best epoch {row.epochs_to_best})\n"
    )
    return EXIT_OK


def cmd_perturb(args) -> int:
    graph, split = load_graph_json(args.graph)
    rng = make_rng(args.seed)
    if args.random is not None:
        graph = random_flip(graph, args.random, rng)
    else:
        for target in args.targeted:
            graph = targeted_flip(graph, target, args.budget, rng)
    save_graph_json(graph, args.out, split)
    log.info("perturb: wrote %s (%d edges)", args.out, graph.num_edges)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _base_experiment(args)
    noise = tuple(n for spec in (args.noise or [base.noise]) for n in expand_noise(spec))
    axes = SweepAxes(
        r=args.r or (base.train.r,),
        placement=args.placement or (base.train.placement,),
        shots=args.shots or (base.train.shots,),
        noise=noise,
    )
    rows = run_sweep(base, axes, args.seeds, args.timing, args.workers)
    if args.results:
        append_results_csv(rows, args.results)
    summary = rpt.aggregate_results(rpt.records_frame(rows))
    _emit(rpt.format_markdown(summary), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    summary = rpt.aggregate_results(rpt.read_results(args.results))
    text = rpt.format_csv(summary) if args.format == "csv" else rpt.format_markdown(summary)
    _emit(text, args.out)
    if args.plot:
        rpt.plot_summary(summary, args.plot)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrgmp", description="Low-rank graph message prompts")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic graph")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--sbm", type=_ints, help="block sizes, e.g. 20,20")
    src.add_argument("--fixture", action="store_true", help="the separable two-block fixture")
    p.add_argument("--p-in", type=float, default=FIXTURE_P_IN)
    p.add_argument("--p-out", type=float, default=FIXTURE_P_OUT)
    p.add_argument("--d-v", type=int, default=SBM_DV)
    p.add_argument("--shift", type=float, default=SBM_SHIFT)
    p.add_argument("--noise-std", type=float, default=SBM_NOISE)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backbone-out", help="also write the fixture backbone here")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="check data prompt / message prompt equivalence")
    p.add_argument("--prop", type=int, choices=oracle.PROPOSITIONS)
    p.add_argument("--trials", type=int, default=EQUIV_TRIALS)
    p.add_argument("--tol", type=float, default=EQUIV_TOL)
    p.add_argument("--max-nodes", type=int, default=EQUIV_SIZE_RANGE[1])
    p.add_argument("--mutant", choices=oracle.MUTANTS)
    p.add_argument("--seed", type=int, help="required unless --gdp is given")
    p.add_argument("--graph", help="graph JSON for a single stored instance")
    p.add_argument("--gdp", help="data prompt JSON to check against its message prompt on --graph")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--configs", type=int, default=GRADCHECK_CONFIGS)
    p.add_argument("--kinds", type=_words, default=gradcheck.DEFAULT_KINDS)
    p.add_argument("--mutant", choices=gradcheck.MUTANTS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--json", help="also write the report JSON here")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="one prompt-tuning run")
    _experiment_flags(p)
    p.add_argument("--r", type=int)
    p.add_argument("--placement", help="first | middle | last | all")
    p.add_argument("--shots", type=int)
    p.add_argument("--noise", help="none | random:<p> | targeted:<budget>")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--metrics", help="metrics JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("perturb", help="flip edges of a graph")
    p.add_argument("--graph", required=True)
    how = p.add_mutually_exclusive_group(required=True)
    how.add_argument("--random", type=float, help="flip fraction p")
    how.add_argument("--targeted", type=_ints, help="target node ids")
    p.add_argument("--budget", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("sweep", help="Cartesian sweep over r, placement, shots and noise")
    _experiment_flags(p)
    p.add_argument("--r", type=_ints)
    p.add_argument("--placement", type=_words)
    p.add_argument("--shots", type=_ints)
    p.add_argument("--noise", action="append", help="e.g. random:0,0.2,0.4 (repeatable)")
    p.add_argument("--seeds", type=_ints, required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="aggregated markdown table path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate a results CSV")
    p.add_argument("results")
    p.add_argument("--format", choices=("md", "csv"), default="md")
    p.add_argument("--out")
    p.add_argument("--plot", help="PNG path for a mean ± std bar chart")
    p.set_defaults(func=cmd_report)
    return parser


def _setup_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    _setup_logging(args)
    log.debug("compute: %s", backend_label())
    try:
        return args.func(args)
    except (LrgmpError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
