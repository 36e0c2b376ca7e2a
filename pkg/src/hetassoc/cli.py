"""Command-line entry point: ``hetassoc {sweep,trial,trace,validate}``.

Every ExperimentConfig field is a ``--flag`` (underscores become dashes) and
may also come from a ``--config`` file of ``key = value`` lines; flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .association import Strategy
from .harness import (ALL_STRATEGIES, ExperimentConfig, TrialError, build_config, config_keys,
                      read_config_file, run_sweep, run_trial_full)
from .metrics import MetricsReport
from .validation import run_validation


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    group = parser.add_argument_group("experiment settings")
    for key, (_, default) in config_keys().items():
        group.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                           metavar="VALUE", help=f"default: {default}")


def _load(args) -> ExperimentConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in config_keys():
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return build_config(values)


def cmd_sweep(args) -> int:
    cfg = _load(args)
    paths = run_sweep(cfg)
    for kind, path in paths.items():
        print(f"{kind}\t{path}")
    return 0


def cmd_trial(args) -> int:
    cfg = _load(args)
    value = args.sweep_value if args.sweep_value is not None else cfg.sweep_values[0]
    seed, links, reports, _ = run_trial_full(cfg, value, args.trial)
    print(f"# {cfg.sweep_variable}={value} trial={args.trial} seed={seed} "
          f"N={links.N} K={links.K}")
    names = MetricsReport.field_names()
    print("\t".join(["strategy"] + names))
    for strategy, rep in reports.items():
        print("\t".join([strategy] + [f"{getattr(rep, n):.6g}" for n in names]))
    return 0


def cmd_trace(args) -> int:
    cfg = _load(args)
    value = args.sweep_value if args.sweep_value is not None else cfg.sweep_values[0]
    _, _, _, traces = run_trial_full(cfg, value, args.trial)
    trace = traces.get(args.strategy)
    if trace is None:
        print(f"{args.strategy} is not iterative; no trace", file=sys.stderr)
        return 2
    sys.stdout.write(trace.to_text())
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    results = run_validation(args.instances, args.seed, params=cfg.radio, cfg=cfg.solver)
    for res in results:
        print(res.line())
    return 0 if all(r.ok for r in results) else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetassoc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a full Monte-Carlo sweep and write CSVs")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sweep)

    for name, func, helptext in (("trial", cmd_trial, "run one seeded trial and print reports"),
                                 ("trace", cmd_trace, "print a solver convergence trace")):
        p = sub.add_parser(name, help=helptext)
        _add_config_flags(p)
        p.add_argument("--sweep-value", type=int, default=None)
        p.add_argument("--trial", type=int, default=0)
        if name == "trace":
            p.add_argument("--strategy", choices=[s for s in ALL_STRATEGIES
                                                  if s in ("AMWEE", "EEAUF", "AUF")],
                           default=Strategy.AMWEE.value)
        p.set_defaults(func=func)

    p = sub.add_parser("validate", help="check solver invariants on random instances")
    _add_config_flags(p)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TrialError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
