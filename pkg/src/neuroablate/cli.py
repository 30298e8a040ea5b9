"""Command-line interface.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .ablation import ORIGINAL, AblationPlan, apply, enumerate_plans, write_plans_csv
from .bp import BPConfig, train_bp
from .datasets import BUILTIN_SCHEMAS, SchemaSpec, gen_synthetic, load_csv
from .ea import EAConfig, evolve
from .errors import ArityError, ConfigError, DataError, DivergenceError
from .experiments import (
    ExperimentSpec,
    Holdout,
    classification_success,
    detect_collapse,
    execute,
    read_records_csv,
    records_of,
    summarize,
    write_records_csv,
    write_summary_csv,
)
from .netcore import Network, Topology

log = logging.getLogger("neuroablate")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3
SYNTHETIC = ("xor", "blobs")
DEFAULT_HIDDEN = {"xor": 4, "blobs": 6}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# argument groups -------------------------------------------------------------


def _add_data(p):
    p.add_argument("--dataset", required=True, help="xor, blobs, or a path to a delimited data file")
    p.add_argument("--schema", help=f"schema file, or one of {', '.join(BUILTIN_SCHEMAS)}")
    p.add_argument("--n", type=int, help="rows for synthetic data (xor: 4, blobs: 200)")
    p.add_argument("--data-seed", type=int, default=0)


def _add_topology(p):
    p.add_argument("--topology", help="I-H-O, e.g. 9-8-2")
    p.add_argument("--no-bias", action="store_true", help="drop the bias weight of every neuron")


def _add_bp(p):
    g = p.add_argument_group("backpropagation")
    g.add_argument("--lr", type=float, default=BPConfig.learning_factor, help="learning factor")
    g.add_argument("--momentum", type=float, default=BPConfig.momentum, help="0 switches momentum off")
    g.add_argument("--epochs", type=int, default=BPConfig.epochs)
    g.add_argument("--shuffle", action="store_true", help="shuffle case order every epoch")
    g.add_argument("--curve-every", type=int)
    g.add_argument("--bp-target-error", type=float, help="stop BP at this training error (%%)")


def _add_ea(p):
    g = p.add_argument_group("evolutionary algorithm")
    g.add_argument("--pop", type=int, default=EAConfig.population_size)
    g.add_argument("--generations", type=int, default=EAConfig.generations)
    g.add_argument("--pc", type=float, default=EAConfig.crossover_prob, help="crossover probability")
    g.add_argument("--pm", type=float, default=EAConfig.mutation_prob, help="mutation probability")
    g.add_argument("--cte", type=float, default=EAConfig.mutation_cte, help="mutation step bound")
    g.add_argument("--target-fit", type=float)
    g.add_argument("--epsilon", type=float, default=EAConfig.epsilon)
    g.add_argument("--inversion", choices=("linear", "reciprocal"), default=EAConfig.inversion)
    g.add_argument("--mutation-mode", choices=("one-gene", "per-gene"), default=EAConfig.mutation_mode)
    g.add_argument("--ea-target-error", type=float, help="stop EA at this training error (%%)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuroablate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-data", help="write a synthetic or normalized dataset as CSV")
    _add_data(p)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("train", help="train one network with BP or EA")
    p.add_argument("--trainer", choices=("bp", "ea"), required=True)
    _add_data(p)
    _add_topology(p)
    _add_bp(p)
    _add_ea(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-range", type=float, default=0.5)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("ablate", help="evaluate a trained network under neuron shutdown")
    p.add_argument("--network", required=True)
    _add_data(p)
    p.add_argument("--ablation", choices=("singles", "pairs", "all"), default="singles")
    p.add_argument("--scale", type=float, default=0.0, help="1 = healthy, 0 = dead")
    p.add_argument("--mode", choices=("beta", "output_scale"), default="beta")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("experiment", help="repeated BP/EA training with ablation sweeps")
    _add_data(p)
    _add_topology(p)
    _add_bp(p)
    _add_ea(p)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--ablation", choices=("none", "singles", "pairs", "all"), default="singles")
    p.add_argument("--eval-split", default="full", help="full or holdout:FRACTION[:SEED]")
    p.add_argument("--seed", type=int, default=0, help="base seed; repetition r uses seed + r")
    p.add_argument("--init-range", type=float, default=0.5)
    p.add_argument("--sd", choices=("population", "sample"), default="population")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("summarize", help="recompute summary.csv from records.csv")
    p.add_argument("--records", required=True)
    p.add_argument("--sd", choices=("population", "sample"), default="population")
    p.add_argument("--out", required=True, help="output CSV path")
    return parser


# helpers ---------------------------------------------------------------------


def load_dataset(args):
    name = args.dataset
    if name in SYNTHETIC:
        n = args.n or (4 if name == "xor" else 200)
        return gen_synthetic(name, n, args.data_seed), {"kind": name, "n": n, "seed": args.data_seed}
    path = Path(name)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    if not args.schema:
        raise ConfigError(f"--schema is required for data file {path}")
    d = load_csv(path, SchemaSpec.load(args.schema))
    return d, {"path": str(path), "schema": args.schema}


def resolve_topology(args, data) -> Topology:
    bias = not getattr(args, "no_bias", False)
    if args.topology:
        t = Topology.parse(args.topology, bias)
    elif args.dataset in SYNTHETIC:
        t = Topology(data.n_inputs, (DEFAULT_HIDDEN[args.dataset],), data.n_classes, bias)
    else:
        raise ConfigError("--topology is required for data files")
    if (t.n_inputs, t.n_outputs) != (data.n_inputs, data.n_classes):
        raise ConfigError(
            f"topology {t} does not fit dataset ({data.n_inputs} inputs, {data.n_classes} classes)"
        )
    return t


def bp_config(args, seed) -> BPConfig:
    return BPConfig(
        learning_factor=args.lr,
        momentum=args.momentum,
        epochs=args.epochs,
        seed=seed,
        shuffle_each_epoch=args.shuffle,
        init_range=args.init_range,
        curve_every=args.curve_every,
        target_error_pct=args.bp_target_error,
    )


def ea_config(args, seed) -> EAConfig:
    return EAConfig(
        population_size=args.pop,
        generations=args.generations,
        crossover_prob=args.pc,
        mutation_prob=args.pm,
        mutation_cte=args.cte,
        target_fit=args.target_fit,
        seed=seed,
        epsilon=args.epsilon,
        init_range=args.init_range,
        inversion=args.inversion,
        mutation_mode=args.mutation_mode,
        target_error_pct=args.ea_target_error,
    )


def parse_split(text: str):
    if text == "full":
        return "full"
    parts = text.split(":")
    if parts[0] != "holdout" or len(parts) not in (2, 3):
        raise ConfigError(f"bad --eval-split {text!r}; use full or holdout:FRACTION[:SEED]")
    try:
        return Holdout(float(parts[1]), int(parts[2]) if len(parts) == 3 else 0)
    except ValueError:
        raise ConfigError(f"bad --eval-split {text!r}") from None


def write_manifest(out: Path, argv, command, config, **extra) -> None:
    manifest = {
        "tool": "neuroablate",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "created": datetime.now(timezone.utc).isoformat(),
        "config": config,
        **extra,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


def _topology_dict(t: Topology):
    return {"text": str(t), "bias": t.bias}


# commands ----------------------------------------------------------------------


def cmd_gen_data(args, argv):
    data, source = load_dataset(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data.write_csv(out)
    log.info("wrote %d rows to %s", len(data), out)
    return EXIT_OK


def cmd_train(args, argv):
    data, source = load_dataset(args)
    topology = resolve_topology(args, data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.trainer == "bp":
        cfg = bp_config(args, args.seed)
        net, curve = train_bp(topology, data, cfg)
    else:
        cfg = ea_config(args, args.seed)
        net, curve = evolve(topology, data, cfg)
    net.save(out / "network.json")
    curve.write_csv(out / "curve.csv")
    success = classification_success(net, data)
    write_manifest(
        out,
        argv,
        "train",
        {"trainer": args.trainer, "dataset": source, "topology": _topology_dict(topology), args.trainer: asdict(cfg)},
        results={"train_success_pct": success, "steps": curve.steps[-1]},
    )
    log.info("%s training success %.2f%% after %d steps", args.trainer, success, curve.steps[-1])
    return EXIT_OK


def cmd_ablate(args, argv):
    if not Path(args.network).exists():
        raise DataError(f"network file not found: {args.network}")
    net = Network.load(args.network)
    data, source = load_dataset(args)
    if (net.topology.n_inputs, net.topology.n_outputs) != (data.n_inputs, data.n_classes):
        raise ArityError(f"network {net.topology} does not fit dataset")
    plans = enumerate_plans(net.topology, args.ablation)
    if args.scale != 0.0:
        plans = [
            AblationPlan(tuple(replace(i, scale=args.scale) for i in p.items), p.label) for p in plans
        ]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_plans_csv(plans, out / "plans.csv")
    with open(out / "ablation.csv", "w") as f:
        f.write("plan_label,plan_category,success_pct,collapsed_class\n")
        for plan in [ORIGINAL, *plans]:
            ablated = apply(net, plan, args.mode)
            c = detect_collapse(ablated, data)
            f.write(
                f"{plan.label},{plan.category},{classification_success(ablated, data)!r},"
                f"{'' if c is None else c}\n"
            )
    write_manifest(
        out,
        argv,
        "ablate",
        {"network": args.network, "dataset": source, "ablation": args.ablation,
         "scale": args.scale, "mode": args.mode},
    )
    return EXIT_OK


def cmd_experiment(args, argv):
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    data, source = load_dataset(args)
    topology = resolve_topology(args, data)
    spec = ExperimentSpec(
        dataset=data,
        topology=topology,
        repetitions=args.reps,
        bp=bp_config(args, args.seed),
        ea=ea_config(args, args.seed),
        ablation=args.ablation,
        eval_split=parse_split(args.eval_split),
        base_seed=args.seed,
    )
    out = Path(args.out)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    results = execute(spec, args.jobs)
    records = records_of(results)
    write_records_csv(records, out / "records.csv")
    for res in results:
        for trainer, curve in res.curves.items():
            curve.write_csv(out / "curves" / f"{trainer}_seed{res.seed}.csv")
    summary = summarize(records, ddof=1 if args.sd == "sample" else 0)
    write_summary_csv(summary, out / "summary.csv")
    failed = sorted({(r.trainer, r.seed) for r in records if r.failed})
    config = {
        "dataset": source,
        "topology": _topology_dict(topology),
        "repetitions": spec.repetitions,
        "base_seed": spec.base_seed,
        "seeds": [spec.base_seed + r for r in range(spec.repetitions)],
        "ablation": spec.ablation,
        "eval_split": args.eval_split,
        "sd": args.sd,
        "jobs": args.jobs,
        "bp": asdict(spec.bp),
        "ea": asdict(spec.ea),
    }
    write_manifest(
        out,
        argv,
        "experiment",
        config,
        failed_runs=[{"trainer": t, "seed": s} for t, s in failed],
        excluded_records={f"{s.trainer}/{s.category}": s.excluded for s in summary if s.excluded},
    )
    if failed and len(failed) == len(spec.trainers) * spec.repetitions:
        log.error("every training run diverged")
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_summarize(args, argv):
    path = Path(args.records)
    if not path.exists():
        raise DataError(f"records file not found: {path}")
    summary = summarize(read_records_csv(path), ddof=1 if args.sd == "sample" else 0)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_summary_csv(summary, out)
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "ablate": cmd_ablate,
    "experiment": cmd_experiment,
    "summarize": cmd_summarize,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"neuroablate: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except ConfigError as e:
        print(f"neuroablate: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as e:
        print(f"neuroablate: divergence: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, ArityError, OSError) as e:
        print(f"neuroablate: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
