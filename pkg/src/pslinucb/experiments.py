"""Experiment orchestration: configs, seeded multi-run execution, aggregation.

A run grid is (policy x seed). Every run draws its environment stream from
(master_seed, seed_index) and its policy stream additionally from the policy
label, so results are reproducible run-by-run and editing one policy's
configuration cannot perturb any other policy's randomness. Aggregates are
written as CSV plus a JSON manifest recording every parameter of the run.
"""

from __future__ import annotations

import inspect
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__ as _package_version
from .environment import (
    DisjointEnvironment,
    DisjointEnvSpec,
    HybridEnvironment,
    HybridEnvSpec,
    _normalize_schedule,
    run_policy,
)
from .errors import ConfigError, ExperimentError, LogParseError
from .policies import (
    LinUCBDisjoint,
    LinUCBHybrid,
    LinUCBUniform,
    PSLinUCBDisjoint,
    PSLinUCBGlobalRestart,
    PSLinUCBHybrid,
    RandomPolicy,
    UCB1,
    theory_alpha,
    theory_explore_rate,
)
from .replay import load_log, replay_evaluate
from .seeding import stream_seed

POLICY_REGISTRY = {
    "random": RandomPolicy,
    "ucb1": UCB1,
    "linucb-uniform": LinUCBUniform,
    "linucb-disjoint": LinUCBDisjoint,
    "linucb-hybrid": LinUCBHybrid,
    "pslinucb-disjoint": PSLinUCBDisjoint,
    "pslinucb-hybrid": PSLinUCBHybrid,
    "pslinucb-global-restart": PSLinUCBGlobalRestart,
}

SWEEP_AXES = {
    "omega": "window_size",
    "delta": "detect_threshold",
    "alpha": "alpha",
}

MODES = ("synth-disjoint", "synth-hybrid", "replay")

_ENV_KEYS = (
    "horizon",
    "n_arms",
    "user_dim",
    "arm_dim",
    "change_period",
    "change_times",
    "noise_sigma",
    "user_mode",
)


@dataclass
class PolicySpec:
    """One policy in an experiment: registry name, constructor params, label."""

    name: str
    params: dict = field(default_factory=dict)
    label: str | None = None

    def resolved_label(self) -> str:
        return self.label if self.label is not None else self.name

    def to_dict(self) -> dict:
        out = {"name": self.name, "params": dict(self.params)}
        if self.label is not None:
            out["label"] = self.label
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PolicySpec":
        if not isinstance(data, dict) or "name" not in data:
            raise ConfigError("each policy entry needs at least a 'name'")
        unknown = set(data) - {"name", "params", "label"}
        if unknown:
            raise ConfigError(f"unknown policy keys: {sorted(unknown)}")
        return cls(
            name=data["name"],
            params=dict(data.get("params", {})),
            label=data.get("label"),
        )


@dataclass
class ExperimentConfig:
    """Complete description of one experiment; round-trips losslessly as JSON."""

    mode: str
    policies: list
    n_seeds: int = 1
    master_seed: int = 0
    environment: dict | None = None
    log_path: str | None = None
    log_normalize: bool = False
    log_subsample: float | None = None
    schema_version: int = 1

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "mode": self.mode,
            "policies": [p.to_dict() for p in self.policies],
            "n_seeds": self.n_seeds,
            "master_seed": self.master_seed,
            "environment": None if self.environment is None else dict(self.environment),
            "log_path": self.log_path,
            "log_normalize": self.log_normalize,
            "log_subsample": self.log_subsample,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {
            "schema_version",
            "mode",
            "policies",
            "n_seeds",
            "master_seed",
            "environment",
            "log_path",
            "log_normalize",
            "log_subsample",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if data.get("schema_version", 1) != 1:
            raise ConfigError(f"unsupported config schema_version {data.get('schema_version')}")
        policies = data.get("policies")
        if not isinstance(policies, list) or not policies:
            raise ConfigError("config needs a non-empty 'policies' list")
        return cls(
            mode=data.get("mode", ""),
            policies=[PolicySpec.from_dict(p) for p in policies],
            n_seeds=int(data.get("n_seeds", 1)),
            master_seed=int(data.get("master_seed", 0)),
            environment=data.get("environment"),
            log_path=data.get("log_path"),
            log_normalize=bool(data.get("log_normalize", False)),
            log_subsample=data.get("log_subsample"),
            schema_version=1,
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_seeds < 1:
            raise ConfigError("n_seeds must be a positive integer")
        labels = [p.resolved_label() for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError("policy labels must be unique; set 'label' to disambiguate")
        for spec in self.policies:
            if spec.name not in POLICY_REGISTRY:
                raise ConfigError(
                    f"unknown policy {spec.name!r}; known: {sorted(POLICY_REGISTRY)}"
                )
            _check_params(POLICY_REGISTRY[spec.name], spec.params, spec.name)
        if self.mode.startswith("synth"):
            if not isinstance(self.environment, dict):
                raise ConfigError("synthetic modes need an 'environment' object")
            unknown = set(self.environment) - set(_ENV_KEYS)
            if unknown:
                raise ConfigError(f"unknown environment keys: {sorted(unknown)}")
            missing = {"horizon", "n_arms", "user_dim", "arm_dim"} - set(self.environment)
            if missing:
                raise ConfigError(f"environment is missing keys: {sorted(missing)}")
        else:
            if not self.log_path:
                raise ConfigError("replay mode needs 'log_path'")
            if not Path(self.log_path).exists():
                raise ConfigError(f"log file not found: {self.log_path}")


def _check_params(cls, params: dict, name: str) -> None:
    if not isinstance(params, dict):
        raise ConfigError(f"params for {name} must be an object")
    allowed = set(inspect.signature(cls.__init__).parameters) - {"self"}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigError(f"policy {name} does not accept params {sorted(unknown)}")


def build_env_spec(config: ExperimentConfig):
    """Environment spec (without a seed) for a synthetic-mode config."""
    env = dict(config.environment)
    cls = HybridEnvSpec if config.mode == "synth-hybrid" else DisjointEnvSpec
    try:
        return cls(**env)
    except TypeError as exc:
        raise ConfigError(f"bad environment config: {exc}") from None


def _env_info(config: ExperimentConfig):
    if not config.mode.startswith("synth"):
        return None
    spec = build_env_spec(config)
    union = {v for times in _normalize_schedule(spec) for v in times}
    return {
        "horizon": spec.horizon,
        "n_arms": spec.n_arms,
        "user_dim": spec.user_dim,
        "arm_dim": spec.arm_dim,
        "segments": 1 + len(union),
    }


def make_policy(spec: PolicySpec, policy_seed=None, env_info: dict | None = None):
    """Instantiate a policy spec, resolving 'theory' parameter values."""
    cls = POLICY_REGISTRY[spec.name]
    params = dict(spec.params)
    if params.get("alpha") == "theory":
        if env_info is None:
            raise ConfigError("alpha='theory' needs a synthetic environment")
        params["alpha"] = theory_alpha(env_info["user_dim"], env_info["horizon"])
    if params.get("explore_rate") == "theory":
        if env_info is None:
            raise ConfigError("explore_rate='theory' needs a synthetic environment")
        window = params.get("window_size", 100)
        params["explore_rate"] = theory_explore_rate(
            env_info["n_arms"], env_info["segments"], window, env_info["horizon"]
        )
    if cls is PSLinUCBGlobalRestart and "horizon" not in params and env_info is not None:
        params["horizon"] = env_info["horizon"]
    if cls is RandomPolicy and "seed" not in params:
        params["seed"] = policy_seed
    params["label"] = spec.resolved_label()
    return cls(**params)


@dataclass
class PolicyAggregate:
    """Across-seed summary for one policy."""

    label: str
    mean_curve: np.ndarray
    stderr_curve: np.ndarray
    finals: np.ndarray
    n_detections: int = 0
    n_restarts: int = 0


@dataclass
class ExperimentResult:
    mode: str
    metric_name: str
    aggregates: dict
    outputs: list = field(default_factory=list)


_LOG_CACHE: dict = {}


def _load_records(config: ExperimentConfig, seed_idx: int | None):
    """Load (and cache) the replay log; subsampling gets a per-run stream."""
    if config.log_subsample is not None:
        return load_log(
            config.log_path,
            normalize=config.log_normalize,
            subsample=config.log_subsample,
            subsample_seed=stream_seed(config.master_seed, seed_idx or 0, "subsample"),
        )
    key = (config.log_path, config.log_normalize)
    if key not in _LOG_CACHE:
        _LOG_CACHE[key] = load_log(config.log_path, normalize=config.log_normalize)
    return _LOG_CACHE[key]


def _run_one(config: ExperimentConfig, policy_spec: PolicySpec, seed_idx: int):
    """One (policy, seed) run; returns (label, seed_idx, curve, final, nd, nr)."""
    label = policy_spec.resolved_label()
    env_info = _env_info(config)
    policy = make_policy(
        policy_spec,
        policy_seed=stream_seed(config.master_seed, seed_idx, "policy", label),
        env_info=env_info,
    )
    if config.mode.startswith("synth"):
        spec = build_env_spec(config).with_seed(
            stream_seed(config.master_seed, seed_idx, "env")
        )
        env_cls = HybridEnvironment if config.mode == "synth-hybrid" else DisjointEnvironment
        record = run_policy(env_cls(spec), policy)
        curve = record.cumulative_regret
        return (
            label,
            seed_idx,
            curve,
            float(curve[-1]),
            len(record.detections),
            len(record.restarts),
        )
    records = _load_records(config, seed_idx)
    result = replay_evaluate(policy, records)
    return (
        label,
        seed_idx,
        result.ctr_series,
        result.ctr,
        len(getattr(policy, "detections", ())),
        len(getattr(policy, "restarts", ())),
    )


def _run_one_task(args):
    config_dict, policy_dict, seed_idx = args
    config = ExperimentConfig.from_dict(config_dict)
    return _run_one(config, PolicySpec.from_dict(policy_dict), seed_idx)


def run_experiment(
    config: ExperimentConfig, out_dir=None, jobs: int = 1
) -> ExperimentResult:
    """Run the full (policy x seed) grid and aggregate across seeds.

    With out_dir set, writes results.csv (one row per step per policy:
    t, policy, metric, stderr) plus manifest.json. Identical configs with the
    same master seed produce byte-identical CSV output. Any failing run
    aborts the experiment with a report naming the policy and seed.
    """
    config.validate()
    metric_name = "mean_cum_regret" if config.mode.startswith("synth") else "mean_ctr"
    tasks = [
        (policy_spec, seed_idx)
        for policy_spec in config.policies
        for seed_idx in range(config.n_seeds)
    ]
    outcomes = {}
    if jobs > 1:
        args = [
            (config.to_dict(), spec.to_dict(), seed_idx) for spec, seed_idx in tasks
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_one_task, a) for a in args]
            for (spec, seed_idx), fut in zip(tasks, futures):
                try:
                    out = fut.result()
                except (ConfigError, LogParseError):
                    raise
                except Exception as exc:
                    raise ExperimentError(
                        f"policy {spec.resolved_label()!r} seed {seed_idx} failed: {exc}"
                    ) from exc
                outcomes[(out[0], out[1])] = out
    else:
        for spec, seed_idx in tasks:
            try:
                out = _run_one(config, spec, seed_idx)
            except (ExperimentError, ConfigError, LogParseError):
                raise
            except Exception as exc:
                raise ExperimentError(
                    f"policy {spec.resolved_label()!r} seed {seed_idx} failed: {exc}"
                ) from exc
            outcomes[(out[0], out[1])] = out

    aggregates = {}
    for spec in config.policies:
        label = spec.resolved_label()
        runs = [outcomes[(label, i)] for i in range(config.n_seeds)]
        min_len = min(len(r[2]) for r in runs)
        curves = np.stack([r[2][:min_len] for r in runs]) if min_len else np.zeros(
            (len(runs), 0)
        )
        mean_curve = curves.mean(axis=0)
        if len(runs) > 1 and min_len:
            stderr_curve = curves.std(axis=0, ddof=1) / np.sqrt(len(runs))
        else:
            stderr_curve = np.zeros(min_len)
        aggregates[label] = PolicyAggregate(
            label=label,
            mean_curve=mean_curve,
            stderr_curve=stderr_curve,
            finals=np.array([r[3] for r in runs]),
            n_detections=sum(r[4] for r in runs),
            n_restarts=sum(r[5] for r in runs),
        )

    result = ExperimentResult(config.mode, metric_name, aggregates)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "results.csv"
        _write_results_csv(csv_path, config, metric_name, aggregates)
        manifest_path = out_dir / "manifest.json"
        _write_manifest(manifest_path, config, metric_name, ["results.csv"])
        result.outputs = [str(csv_path), str(manifest_path)]
    return result


def _write_results_csv(path, config, metric_name, aggregates) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"t,policy,{metric_name},stderr\n")
        for spec in config.policies:
            agg = aggregates[spec.resolved_label()]
            for i in range(len(agg.mean_curve)):
                fh.write(
                    f"{i + 1},{agg.label},{repr(float(agg.mean_curve[i]))},"
                    f"{repr(float(agg.stderr_curve[i]))}\n"
                )


def _write_manifest(path, config, metric_name, outputs, extra: dict | None = None) -> None:
    manifest = {
        "package_version": _package_version,
        "config": config.to_dict(),
        "metric": metric_name,
        "outputs": outputs,
        "seed_plan": {
            "scheme": "SeedSequence entropy [master_seed, seed_index, stream, label_hash?]",
            "streams": {"env": 0, "policy": 1, "subsample": 2},
            "seed_indexes": list(range(config.n_seeds)),
        },
    }
    if extra:
        manifest.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class SweepResult:
    axis: str
    values: list
    metric_name: str
    rows: list
    outputs: list = field(default_factory=list)


def run_sweep(
    config: ExperimentConfig, axis: str, values, out_dir=None, jobs: int = 1
) -> SweepResult:
    """Repeat the experiment across one hyperparameter axis.

    The axis parameter is overridden on every policy whose constructor
    accepts it; other policies run unchanged as references. Writes sweep.csv
    with one row per (policy, value): the across-seed mean and standard
    error of the final metric.
    """
    config.validate()
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {sorted(SWEEP_AXES)}")
    param = SWEEP_AXES[axis]
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    applicable = [
        spec
        for spec in config.policies
        if param in inspect.signature(POLICY_REGISTRY[spec.name].__init__).parameters
    ]
    if not applicable:
        raise ConfigError(f"no configured policy accepts sweep axis {axis!r}")
    metric_name = "mean_cum_regret" if config.mode.startswith("synth") else "mean_ctr"
    rows = []
    for value in values:
        policies = []
        for spec in config.policies:
            params = dict(spec.params)
            if spec in applicable:
                params[param] = value
            policies.append(PolicySpec(spec.name, params, spec.label))
        sub = ExperimentConfig(
            mode=config.mode,
            policies=policies,
            n_seeds=config.n_seeds,
            master_seed=config.master_seed,
            environment=config.environment,
            log_path=config.log_path,
            log_normalize=config.log_normalize,
            log_subsample=config.log_subsample,
        )
        result = run_experiment(sub, out_dir=None, jobs=jobs)
        for spec in config.policies:
            agg = result.aggregates[spec.resolved_label()]
            mean = float(np.mean(agg.finals))
            stderr = (
                float(np.std(agg.finals, ddof=1) / np.sqrt(len(agg.finals)))
                if len(agg.finals) > 1
                else 0.0
            )
            rows.append((spec.resolved_label(), value, mean, stderr))
    sweep = SweepResult(axis, values, metric_name, rows)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "sweep.csv"
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(f"policy,{axis},final_{metric_name},stderr\n")
            for label, value, mean, stderr in rows:
                fh.write(f"{label},{repr(float(value))},{repr(mean)},{repr(stderr)}\n")
        manifest_path = out_dir / "manifest.json"
        _write_manifest(
            manifest_path,
            config,
            metric_name,
            ["sweep.csv"],
            extra={"sweep": {"axis": axis, "values": [float(v) for v in values]}},
        )
        sweep.outputs = [str(csv_path), str(manifest_path)]
    return sweep
