"""Command-line front end for running experiments, sweeps, and log export.

Exit codes: 0 on success, 1 for configuration or input errors, 2 for
runtime failures during execution.
"""

from __future__ import annotations

import argparse
import sys

from .environment import DisjointEnvironment, HybridEnvironment
from .errors import ConfigError, ExperimentError, LogParseError
from .experiments import (
    ExperimentConfig,
    PolicySpec,
    POLICY_REGISTRY,
    SWEEP_AXES,
    build_env_spec,
    make_policy,
    run_experiment,
    run_sweep,
)
from .replay import export_log
from .seeding import stream_seed


def _add_common(sub) -> None:
    sub.add_argument("--config", required=True, help="path to a JSON experiment config")
    sub.add_argument("--seeds", type=int, default=None, help="override n_seeds")
    sub.add_argument("--master-seed", type=int, default=None, help="override master_seed")
    sub.add_argument("--out", default=None, help="output directory for CSV + manifest")
    sub.add_argument("--jobs", type=int, default=1, help="parallel worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pslinucb",
        description="Piecewise-stationary contextual bandit experiments.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    for mode in ("synth-disjoint", "synth-hybrid", "replay"):
        sub = subs.add_parser(mode, help=f"run a {mode} experiment")
        _add_common(sub)
        sub.set_defaults(func=_cmd_experiment, mode=mode)

    sweep = subs.add_parser("sweep", help="sweep one hyperparameter axis")
    _add_common(sweep)
    sweep.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sweep.add_argument(
        "--values", required=True, help="comma-separated values, e.g. 50,100,200"
    )
    sweep.set_defaults(func=_cmd_sweep, mode=None)

    export = subs.add_parser(
        "export-log", help="run a logging policy on a synthetic environment"
    )
    export.add_argument("--config", required=True, help="path to a JSON experiment config")
    export.add_argument(
        "--policy",
        default="random",
        choices=sorted(POLICY_REGISTRY),
        help="registry name of the logging policy",
    )
    export.add_argument("--master-seed", type=int, default=None, help="override master_seed")
    export.add_argument("--out", required=True, help="path of the log file to write")
    export.set_defaults(func=_cmd_export, mode=None)

    return parser


def _load_config(args, mode: str | None) -> ExperimentConfig:
    config = ExperimentConfig.from_json_file(args.config)
    if mode is not None:
        if config.mode and config.mode != mode:
            raise ConfigError(
                f"config mode {config.mode!r} conflicts with subcommand {mode!r}"
            )
        config.mode = mode
    if args.seeds is not None:
        config.n_seeds = args.seeds
    if args.master_seed is not None:
        config.master_seed = args.master_seed
    return config


def _cmd_experiment(args) -> int:
    config = _load_config(args, args.mode)
    result = run_experiment(config, out_dir=args.out, jobs=args.jobs)
    for label, agg in result.aggregates.items():
        mean = float(agg.finals.mean())
        print(
            f"policy={label} final_{result.metric_name}={mean:.6g} "
            f"detections={agg.n_detections} restarts={agg.n_restarts}"
        )
    for path in result.outputs:
        print(f"wrote {path}")
    return 0


def _parse_values(axis: str, text: str):
    values = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        value = float(token)
        if axis == "omega":
            if value != int(value) or value < 1:
                raise ConfigError(f"omega values must be positive integers, got {token}")
            value = int(value)
        values.append(value)
    if not values:
        raise ConfigError("--values must list at least one number")
    return values


def _cmd_sweep(args) -> int:
    config = _load_config(args, None)
    values = _parse_values(args.axis, args.values)
    result = run_sweep(config, args.axis, values, out_dir=args.out, jobs=args.jobs)
    for label, value, mean, stderr in result.rows:
        print(
            f"policy={label} {args.axis}={value} "
            f"final_{result.metric_name}={mean:.6g} stderr={stderr:.3g}"
        )
    for path in result.outputs:
        print(f"wrote {path}")
    return 0


def _cmd_export(args) -> int:
    config = ExperimentConfig.from_json_file(args.config)
    if not config.mode.startswith("synth"):
        raise ConfigError("export-log needs a synthetic-mode config")
    if args.master_seed is not None:
        config.master_seed = args.master_seed
    spec = build_env_spec(config).with_seed(stream_seed(config.master_seed, 0, "env"))
    env_cls = HybridEnvironment if config.mode == "synth-hybrid" else DisjointEnvironment
    env = env_cls(spec)
    policy = make_policy(
        PolicySpec(name=args.policy),
        policy_seed=stream_seed(config.master_seed, 0, "policy", args.policy),
        env_info=None if args.policy != "pslinucb-global-restart" else {
            "horizon": spec.horizon,
            "n_arms": spec.n_arms,
            "user_dim": spec.user_dim,
            "arm_dim": spec.arm_dim,
            "segments": 1,
        },
    )
    records = export_log(env, policy, args.out)
    print(f"wrote {args.out} ({len(records)} events)")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError, LogParseError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExperimentError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
