"""Command-line front end: config parsing, orchestration, artifact output.

One JSON config file plus flag overrides fully determines a run; artifacts
are written atomically and are byte-identical across reruns and across
worker counts. Errors leave a single machine-readable JSON object on
stderr and a nonzero exit status.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from . import density as density_mod
from . import hypothesis as hyp_mod
from . import learning
from . import rosenblatt
from ._svg import render_rate_plot
from .errors import ConfigInvalid, TriganError

_COMMANDS = ("sample", "density", "fit", "sampling-error", "rate", "bounds")
_STOCHASTIC = {"sample", "fit", "sampling-error", "rate"}

_ALLOWED = {
    "sample": {"target", "n", "seed", "out", "threads", "resolution"},
    "density": {"target", "out", "resolution"},
    "fit": {"target", "hypothesis", "n", "seed", "strategy", "epsilon", "out",
            "threads", "resolution"},
    "sampling-error": {"target", "hypothesis", "n", "trials", "seed", "epsilon",
                       "threads", "out", "resolution"},
    "rate": {"target", "hypothesis", "n_grid", "trials", "seed", "delta", "delta1",
             "epsilon", "threads", "out", "exact_integral", "resolution"},
    "bounds": {"hypothesis", "n", "delta", "delta1", "beta", "exact_integral", "out"},
}
_REQUIRED = {
    "sample": {"target", "n", "seed"},
    "density": {"target"},
    "fit": {"target", "hypothesis", "n", "seed"},
    "sampling-error": {"target", "hypothesis", "n", "trials", "seed"},
    "rate": {"target", "hypothesis", "n_grid", "trials", "seed"},
    "bounds": {"hypothesis", "n"},
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    target: dict | None = None
    hypothesis: dict | None = None
    n: int | None = None
    n_grid: tuple | None = None
    trials: int | None = None
    seed: int | None = None
    delta: float = 0.1
    delta1: float | None = None
    beta: float | None = None
    epsilon: float = 0.25
    out: str = "."
    threads: int = 1
    exact_integral: bool = False
    strategy: str = "net"
    resolution: int | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigInvalid(message)


def _positive_int(raw, key: str, minimum: int = 1) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigInvalid(f"{key} must be an integer")
    if raw < minimum:
        raise ConfigInvalid(f"{key} must be >= {minimum}")
    return raw


def build_run_config(command: str, file_cfg: dict, overrides: dict) -> RunConfig:
    if command not in _COMMANDS:
        raise ConfigInvalid(f"unknown command {command!r}")
    allowed = _ALLOWED[command]
    unknown = set(file_cfg) - allowed
    if unknown:
        raise ConfigInvalid(f"unknown config keys for {command}: {sorted(unknown)}")
    merged = dict(file_cfg)
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in allowed:
            raise ConfigInvalid(f"flag --{key.replace('_', '-')} not valid for {command}")
        merged[key] = val
    missing = _REQUIRED[command] - set(merged)
    if missing:
        raise ConfigInvalid(f"{command} requires config keys {sorted(missing)}")
    if command in _STOCHASTIC and "seed" not in merged:
        raise ConfigInvalid(f"{command} is stochastic: seed is mandatory")

    kw: dict = {"command": command}
    if "target" in merged:
        kw["target"] = merged["target"]
    if "hypothesis" in merged:
        kw["hypothesis"] = merged["hypothesis"]
    if "n" in merged:
        kw["n"] = _positive_int(merged["n"], "n")
    if "n_grid" in merged:
        grid = merged["n_grid"]
        if not isinstance(grid, (list, tuple)) or not grid:
            raise ConfigInvalid("n_grid must be a nonempty list")
        kw["n_grid"] = tuple(_positive_int(v, "n_grid entry") for v in grid)
    if "trials" in merged:
        kw["trials"] = _positive_int(merged["trials"], "trials")
    if "seed" in merged:
        if isinstance(merged["seed"], bool) or not isinstance(merged["seed"], int):
            raise ConfigInvalid("seed must be an integer")
        kw["seed"] = merged["seed"]
    if "delta" in merged:
        kw["delta"] = float(merged["delta"])
        if kw["delta"] <= 0.0:
            raise ConfigInvalid("delta must be positive")
    if "delta1" in merged:
        kw["delta1"] = float(merged["delta1"])
        if kw["delta1"] <= 0.0:
            raise ConfigInvalid("delta1 must be positive")
    if "beta" in merged:
        kw["beta"] = float(merged["beta"])
        if kw["beta"] <= 0.0:
            raise ConfigInvalid("beta must be positive")
    if "epsilon" in merged:
        kw["epsilon"] = float(merged["epsilon"])
        if kw["epsilon"] <= 0.0:
            raise ConfigInvalid("epsilon must be positive")
    if "out" in merged:
        if not isinstance(merged["out"], str):
            raise ConfigInvalid("out must be a directory path")
        kw["out"] = merged["out"]
    if "threads" in merged:
        kw["threads"] = _positive_int(merged["threads"], "threads")
    if "exact_integral" in merged:
        if not isinstance(merged["exact_integral"], bool):
            raise ConfigInvalid("exact_integral must be a boolean")
        kw["exact_integral"] = merged["exact_integral"]
    if "strategy" in merged:
        if merged["strategy"] not in ("net", "grad"):
            raise ConfigInvalid("strategy must be 'net' or 'grad'")
        kw["strategy"] = merged["strategy"]
    if "resolution" in merged:
        kw["resolution"] = _positive_int(merged["resolution"], "resolution", minimum=2)
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# pieces


def _build_target(spec, resolution: int | None) -> density_mod.GridDensity:
    if not isinstance(spec, dict):
        raise ConfigInvalid("target must be an object")
    if "path" in spec:
        unknown = set(spec) - {"path"}
        if unknown:
            raise ConfigInvalid(f"unknown target keys {sorted(unknown)}")
        return density_mod.load_density(spec["path"])
    unknown = set(spec) - {"family", "dim", "resolution", "params"}
    if unknown:
        raise ConfigInvalid(f"unknown target keys {sorted(unknown)}")
    if "family" not in spec:
        raise ConfigInvalid("target needs a 'family' or a 'path'")
    return density_mod.make_density(spec["family"], dim=spec.get("dim"),
                                    resolution=spec.get("resolution", resolution),
                                    params=spec.get("params"))


def _build_hypothesis(payload) -> hyp_mod.HypothesisConfig:
    if not isinstance(payload, dict):
        raise ConfigInvalid("hypothesis must be an object")
    return hyp_mod.config_from_dict(payload)


def _out_path(rc: RunConfig, name: str) -> str:
    os.makedirs(rc.out, exist_ok=True)
    return os.path.join(rc.out, name)


def _samples_csv(points: np.ndarray) -> str:
    d = points.shape[1]
    lines = [",".join(f"y{i + 1}" for i in range(d))]
    for row in points:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# commands


def _cmd_sample(rc: RunConfig) -> None:
    target = _build_target(rc.target, rc.resolution)
    gen = rosenblatt.build_rosenblatt(target).inverse()
    pts = rosenblatt.sample(gen, rc.n, rc.seed)
    path = _out_path(rc, "samples.csv")
    density_mod.write_text_atomic(_samples_csv(pts), path)
    print(f"sample: {rc.n} points, dim {target.dim}, seed {rc.seed} -> {path}")


def _cmd_density(rc: RunConfig) -> None:
    target = _build_target(rc.target, rc.resolution)
    path = _out_path(rc, "density.json")
    density_mod.save_density(target, path)
    print(f"density: dim {target.dim}, resolution {target.resolution}, "
          f"min {target.kappa!r} -> {path}")


def _cmd_fit(rc: RunConfig) -> None:
    target = _build_target(rc.target, rc.resolution)
    config = _build_hypothesis(rc.hypothesis)
    sample = learning.make_training_sample(target, rc.n, rc.seed)
    strategy = "net_exhaustive" if rc.strategy == "net" else "alternating_gradient"
    result = learning.minimax_fit(config, target, sample, strategy,
                                  epsilon=rc.epsilon)
    payload = {
        "strategy": result.strategy,
        "converged": result.converged,
        "achieved_value": result.achieved_value,
        "js_to_target": result.js_to_target,
        "best_params": [float(v) for v in result.best_generator.coefficients],
        "jac_lower": result.best_generator.jac_lower,
        "c1_upper": result.best_generator.c1_upper,
        "inner_values": {str(key): val for key, val in result.inner_values.items()},
        "trace": list(result.trace),
    }
    path = _out_path(rc, "fit.json")
    density_mod.write_json_atomic(payload, path)
    print(f"fit: strategy {result.strategy}, value {result.achieved_value!r}, "
          f"js {result.js_to_target!r} -> {path}")


def _cmd_sampling_error(rc: RunConfig) -> None:
    target = _build_target(rc.target, rc.resolution)
    config = _build_hypothesis(rc.hypothesis)
    net_pair = learning.make_net_pair(config, rc.epsilon)
    summ = learning.estimate_sampling_error(config, target, net_pair, rc.n,
                                            rc.trials, rc.seed, threads=rc.threads)
    print(f"sampling-error: n {summ.n}, trials {summ.trials}, mean {summ.mean!r}, "
          f"std {summ.std!r}, q05 {summ.q05!r}, q50 {summ.q50!r}, q95 {summ.q95!r}")


def _cmd_rate(rc: RunConfig) -> None:
    target = _build_target(rc.target, rc.resolution)
    config = _build_hypothesis(rc.hypothesis)
    net_pair = learning.make_net_pair(config, rc.epsilon)
    report = learning.rate_experiment(config, target, list(rc.n_grid), rc.trials,
                                      rc.seed, delta=rc.delta, threads=rc.threads,
                                      net_pair=net_pair)
    csv_path = _out_path(rc, "rate.csv")
    density_mod.write_text_atomic(learning.rate_report_csv(report), csv_path)
    svg_path = _out_path(rc, "rate.svg")
    density_mod.write_text_atomic(render_rate_plot(report), svg_path)
    n_ref = max(rc.n_grid)
    brep = bounds_mod.bound_report(config.dim, config.alpha, config.k, config.K,
                                   n_ref, delta=rc.delta,
                                   delta1=rc.delta1 if rc.delta1 is not None
                                   else report.delta1,
                                   exact_integral=rc.exact_integral)
    bounds_path = _out_path(rc, "bounds.json")
    density_mod.write_json_atomic(bounds_mod.report_to_dict(brep), bounds_path)
    for warning in report.warnings:
        print(f"rate: warning: {warning}")
    print(f"rate: slope {report.slope!r}, net {report.net_size} members "
          f"x {report.pair_count} pairs -> {csv_path} {svg_path} {bounds_path}")


def _cmd_bounds(rc: RunConfig) -> None:
    config = _build_hypothesis(rc.hypothesis)
    big_k = config.K
    if rc.beta is not None:
        big_k = bounds_mod.k_schedule(rc.n, rc.beta)
        if big_k <= 1.0:
            raise ConfigInvalid("k_schedule gave K <= 1; raise n or beta")
    delta1 = rc.delta1 if rc.delta1 is not None else hyp_mod.family_delta1(config)
    report = bounds_mod.bound_report(config.dim, config.alpha, config.k, big_k,
                                     rc.n, delta=rc.delta, delta1=delta1,
                                     exact_integral=rc.exact_integral)
    path = _out_path(rc, "bounds.json")
    density_mod.write_json_atomic(bounds_mod.report_to_dict(report), path)
    print(bounds_mod.report_table(report))
    print(f"bounds: regularity_ok {report.regularity_ok} -> {path}")


_DISPATCH = {
    "sample": _cmd_sample,
    "density": _cmd_density,
    "fit": _cmd_fit,
    "sampling-error": _cmd_sampling_error,
    "rate": _cmd_rate,
    "bounds": _cmd_bounds,
}


# ---------------------------------------------------------------------------
# entry point


def _make_parser() -> _Parser:
    parser = _Parser(prog="trigan",
                     description="Triangular-map generative learning workbench")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--exact-integral", dest="exact_integral",
                        action="store_true", default=None)
        sp.add_argument("--strategy", choices=("net", "grad"), default=None)
        sp.add_argument("--delta", type=float, default=None)
        sp.add_argument("--beta", type=float, default=None)
    return parser


def main(argv=None) -> int:
    try:
        args = _make_parser().parse_args(argv)
        file_cfg = {}
        if args.config is not None:
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
            if not isinstance(file_cfg, dict):
                raise ConfigInvalid("config file must hold a JSON object")
        overrides = {"seed": args.seed, "threads": args.threads, "out": args.out,
                     "exact_integral": args.exact_integral,
                     "strategy": args.strategy, "delta": args.delta,
                     "beta": args.beta}
        rc = build_run_config(args.command, file_cfg, overrides)
        _DISPATCH[rc.command](rc)
        return 0
    except TriganError as exc:
        blob = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(blob, sort_keys=True), file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        blob = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(blob, sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
