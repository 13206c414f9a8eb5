"""Command-line interface.

Subcommands cover the full pipeline: ``simulate`` writes a synthetic
dataset directory, ``fit`` runs the sampler over a dataset and persists
the trace, ``test`` turns a trace into the three report files, ``power``
runs a power/type-I experiment plan, and ``sweep`` runs the
threshold-sensitivity comparison.  Every subcommand accepts ``--config``
with a JSON file supplying defaults that explicit flags override.

Exit codes: 0 success, 1 usage error (bad flags or malformed config),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._util import atomic_write_text, canonical_json
from .data import load_dataset, save_dataset
from .harness import (
    ExperimentPlan,
    hyperparams_from_dict,
    mcmc_from_dict,
    run_power_curve,
    run_threshold_sweep,
)
from .hypotheses import (
    edge_statistic,
    entity_tests,
    population_test,
    write_edge_tests,
    write_entity_tests,
    write_population_test,
)
from .sampler import Trace, run_chain
from .synth import load_simulation_config, simulation_from_dict


class UsageError(Exception):
    """Bad invocation: wrong flags or an unreadable/malformed config."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must contain a JSON object")
    return cfg


def _merge(config: dict, args: argparse.Namespace, keys: dict) -> dict:
    """Flag value if given, else config value, else the supplied default."""
    out = {}
    for key, default in keys.items():
        flag_val = getattr(args, key, None)
        out[key] = flag_val if flag_val is not None else config.get(key, default)
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="netpop", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    p = sub.add_parser("simulate",
                       help="generate a synthetic dataset directory")
    p.add_argument("--spec", required=True, help="simulation config JSON")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--entities", type=int, help="entities per population override")
    p.add_argument("--time-points", type=int, dest="time_points")

    p = sub.add_parser("fit",
                       help="fit the model to a dataset directory")
    p.add_argument("dataset", help="dataset directory")
    p.add_argument("--out", required=True, help="run directory for the trace")
    p.add_argument("--config", help="JSON with hyperparameter/chain defaults")
    p.add_argument("--variant", choices=["fixed", "mixed"])
    p.add_argument("--family", choices=["binomial", "poisson"])
    p.add_argument("--clusters", type=int, dest="n_clusters")
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--alpha", type=float)
    p.add_argument("--prior-h1", type=float, dest="prior_h1")
    p.add_argument("--samples", type=int, dest="n_samples")
    p.add_argument("--burn-in", type=int, dest="burn_in")
    p.add_argument("--thin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mixing-scale", type=float, dest="entity_mixing_scale")

    p = sub.add_parser("test",
                       help="write test reports for a fitted run directory")
    p.add_argument("run_dir", help="directory holding a persisted trace")
    p.add_argument("--significance", type=float, default=0.1)
    p.add_argument("--decision-threshold", type=float, default=0.95,
                   dest="decision_threshold")
    p.add_argument("--skip-entity-tests", action="store_true")

    p = sub.add_parser("power",
                       help="run a power / type-I experiment plan")
    p.add_argument("--config", required=True, help="experiment plan JSON")
    p.add_argument("--out", required=True)

    p = sub.add_parser("sweep",
                       help="threshold-sensitivity sweep against references")
    p.add_argument("--config", required=True, help="sweep config JSON")
    p.add_argument("--out", required=True)
    return parser


def _cmd_simulate(args) -> int:
    try:
        sim = load_simulation_config(args.spec)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read simulation spec {args.spec}: {exc}") from exc
    dataset = simulation_from_dict(
        sim,
        entities_per_population=args.entities,
        time_points=args.time_points,
        seed=args.seed,
    )
    save_dataset(dataset, args.out)
    resolved = dict(sim)
    cfg = dict(resolved.get("config", {}))
    if args.entities is not None:
        cfg["entities_per_population"] = args.entities
    if args.time_points is not None:
        cfg["time_points"] = args.time_points
    if args.seed is not None:
        cfg["seed"] = args.seed
    resolved["config"] = cfg
    atomic_write_text(Path(args.out) / "simulation.json", canonical_json(resolved))
    print(f"wrote {len(dataset.graphs)} graphs to {args.out}")
    return 0


def _cmd_fit(args) -> int:
    config = _load_config(args.config)
    merged = _merge(config, args, {
        "n_clusters": 15, "latent_dim": 10, "alpha": None, "prior_h1": 0.5,
        "family": "binomial", "entity_mixing_scale": 1.0, "variant": "fixed",
        "n_samples": 1300, "burn_in": 200, "thin": 10, "seed": 0,
    })
    hp = hyperparams_from_dict(merged)
    cfg = mcmc_from_dict(merged, seed=int(merged["seed"]), variant=merged["variant"])
    dataset = load_dataset(args.dataset)
    trace = run_chain(dataset, hp, cfg, out_dir=args.out)
    print(
        f"fit complete: {trace.n_recorded} recorded sweeps, "
        f"p_h1={trace.test_indicator.mean():.4f}, trace in {args.out}"
    )
    return 0


def _cmd_test(args) -> int:
    run_dir = Path(args.run_dir)
    trace = Trace.load(run_dir)
    if not trace.complete:
        raise RuntimeError(f"trace in {run_dir} is marked incomplete; refit first")
    config_hash = trace.meta.get("config_hash")

    pop = population_test(trace, decision_threshold=args.decision_threshold)
    write_population_test(pop, run_dir / "population_test.json", config_hash)
    if not args.skip_entity_tests:
        write_entity_tests(entity_tests(trace), run_dir / "entity_tests.csv")
    edge = edge_statistic(trace, significance=args.significance)
    write_edge_tests(edge, trace.n_nodes, run_dir / "edge_tests.csv")
    verdict = "reject" if pop.reject_null else "accept"
    print(f"p_h1={pop.p_h1:.4f} ({verdict} at {args.decision_threshold}); reports in {run_dir}")
    return 0


def _cmd_power(args) -> int:
    config = _load_config(args.config)
    try:
        plan = ExperimentPlan.from_dict(config)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid experiment plan: {exc}") from exc
    points = run_power_curve(plan, out_dir=args.out)
    atomic_write_text(Path(args.out) / "plan.json", canonical_json(config))
    for pt in points:
        print(
            f"size={pt.sample_size}: mean_p_h1={pt.mean_p_h1:.4f} "
            f"[{pt.percentile_05:.4f}, {pt.percentile_95:.4f}] "
            f"rejection_rate={pt.rejection_rate:.2f}"
        )
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args.config)
    if "levels" not in config:
        raise UsageError("sweep config needs a 'levels' list")
    if "dataset" in config:
        dataset = load_dataset(config["dataset"])
    elif "simulation" in config:
        dataset = simulation_from_dict(config["simulation"])
    else:
        raise UsageError("sweep config needs 'dataset' or 'simulation'")
    rows = run_threshold_sweep(
        dataset,
        levels=config["levels"],
        hyperparams=config.get("hyperparams"),
        mcmc=config.get("mcmc"),
        seed=int(config.get("seed", 0)),
        reference_seeds=config.get("reference_seeds"),
        out_dir=args.out,
    )
    atomic_write_text(Path(args.out) / "sweep_config.json", canonical_json(config))
    for method, level, p in rows:
        level_txt = "-" if level is None else f"{level:.2f}"
        print(f"{method} level={level_txt}: p_h1={p:.4f}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "fit": _cmd_fit,
    "test": _cmd_test,
    "power": _cmd_power,
    "sweep": _cmd_sweep,
}


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"netpop {argv[0] if argv else ''}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
