"""Batch front end driven by a declarative JSON run configuration.

One invocation runs one task (optimize, evaluate, or simulate) and
writes structured output files into the configured directory.  All
numeric output is serialized with 12 significant digits, so identical
(config, seed) pairs produce byte-identical files.

Exit codes: 0 on success, 1 on numerical failure (singular matrices,
degenerate bands), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .criterion import ComparisonProblem, CriterionReport, design_criterion, problem_engines, write_criterion_curve
from .models import (
    DesignError,
    DesignPair,
    GroupDesign,
    Interval,
    KernelError,
    kernel_preset,
    parse_model,
)
from .optimize import DesignSearchResult, PsoConfig, optimize_design_pair, uniform_design
from .simulate import SimulationPlan, coverage_experiment, write_band, write_summary

__all__ = ["ConfigError", "run", "main"]

TASKS = ("optimize", "evaluate", "simulate")

_TOP_KEYS = {
    "task", "interval", "group1", "group2", "p", "designs", "pso",
    "simulation", "seed", "output_dir",
}
_GROUP_KEYS = {"model", "kernel", "n"}
_INTERVAL_KEYS = {"a", "b"}
_DESIGNS_KEYS = {"group1", "group2"}
_PSO_KEYS = {"particles", "iterations", "inertia", "cognitive", "social", "seed", "restarts"}
_SIM_KEYS = {
    "theta1", "theta2", "replications", "alpha", "bootstrap_reps",
    "grid_points", "estimator", "seed",
}


class ConfigError(ValueError):
    """The run configuration is unreadable, malformed, or inconsistent."""


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(
            f"{context}: unknown key(s) {unknown}; allowed keys are {sorted(allowed)}"
        )


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key '{key}'")
    return mapping[key]


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(config, dict):
        raise ConfigError(f"{path}: top-level value must be an object")
    return config


def _build_interval(config: dict) -> Interval:
    section = _require(config, "interval", "config")
    if not isinstance(section, dict):
        raise ConfigError("interval: must be an object with keys 'a' and 'b'")
    _check_keys(section, _INTERVAL_KEYS, "interval")
    try:
        return Interval(float(_require(section, "a", "interval")),
                        float(_require(section, "b", "interval")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"interval: {exc}") from None


def _build_group(config: dict, label: str):
    section = _require(config, label, "config")
    if not isinstance(section, dict):
        raise ConfigError(f"{label}: must be an object with keys {sorted(_GROUP_KEYS)}")
    _check_keys(section, _GROUP_KEYS, label)
    try:
        model = parse_model(_require(section, "model", label))
    except ValueError as exc:
        raise ConfigError(f"{label}.model: {exc}") from None
    try:
        kernel = kernel_preset(str(_require(section, "kernel", label)))
    except KernelError as exc:
        raise ConfigError(f"{label}.kernel: {exc}") from None
    n = section.get("n")
    if n is not None:
        if not isinstance(n, int) or n < 2:
            raise ConfigError(f"{label}.n: expected an integer >= 2, got {n!r}")
    return model, kernel, n


def _build_designs(config: dict, interval: Interval, sizes: tuple[int, int]) -> DesignPair:
    section = config.get("designs")
    if section is None:
        return DesignPair(
            uniform_design(sizes[0], interval), uniform_design(sizes[1], interval)
        )
    if not isinstance(section, dict):
        raise ConfigError("designs: must be an object with keys 'group1' and 'group2'")
    _check_keys(section, _DESIGNS_KEYS, "designs")
    groups = []
    for label, n in zip(("group1", "group2"), sizes):
        points = _require(section, label, "designs")
        try:
            design = GroupDesign(interval, np.asarray(points, dtype=float))
        except (DesignError, TypeError, ValueError) as exc:
            raise ConfigError(f"designs.{label}: {exc}") from None
        if n is not None and design.n != n:
            raise ConfigError(
                f"designs.{label}: {design.n} points given but {label}.n = {n}"
            )
        groups.append(design)
    return DesignPair(groups[0], groups[1])


def _build_pso(config: dict, default_seed: int) -> PsoConfig:
    section = config.get("pso", {})
    if not isinstance(section, dict):
        raise ConfigError("pso: must be an object")
    _check_keys(section, _PSO_KEYS, "pso")
    kwargs = dict(section)
    kwargs.setdefault("seed", default_seed)
    try:
        return PsoConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"pso: {exc}") from None


def _build_plan(
    config: dict,
    problem: ComparisonProblem,
    designs: DesignPair,
    default_seed: int,
) -> SimulationPlan:
    section = _require(config, "simulation", "config")
    if not isinstance(section, dict):
        raise ConfigError("simulation: must be an object")
    _check_keys(section, _SIM_KEYS, "simulation")
    kwargs = {
        "theta1": _require(section, "theta1", "simulation"),
        "theta2": _require(section, "theta2", "simulation"),
        "replications": section.get("replications", 100),
        "alpha": section.get("alpha", 0.05),
        "bootstrap_reps": section.get("bootstrap_reps", 1000),
        "grid_points": section.get("grid_points", 201),
        "estimator": section.get("estimator", "increment"),
        "seed": section.get("seed", default_seed),
    }
    try:
        return SimulationPlan(problem=problem, designs=designs, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"simulation: {exc}") from None


def _parse_order(config: dict) -> float:
    p = config.get("p", "inf")
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity"):
            return float("inf")
        raise ConfigError(f"p: expected a number >= 1 or 'inf', got {p!r}")
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise ConfigError(f"p: expected a number >= 1 or 'inf', got {p!r}") from None
    if p < 1:
        raise ConfigError(f"p: expected a number >= 1 or 'inf', got {p}")
    return p


def _round_floats(value):
    """Round floats to 12 significant digits, recursively."""
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_round_floats(float(v)) for v in value.ravel()] if value.ndim == 1 else [
            _round_floats(row) for row in value
        ]
    if isinstance(value, (np.floating,)):
        return _round_floats(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _design_record(
    task: str,
    seed: int,
    problem: ComparisonProblem,
    designs: DesignPair,
    report: CriterionReport,
    search: DesignSearchResult | None = None,
) -> dict:
    engines = problem_engines(problem)
    groups = []
    for label, engine, design in zip(
        ("group1", "group2"), engines, (designs.group1, designs.group2)
    ):
        weights = engine.weights(design.points)
        groups.append(
            {
                "label": label,
                "model": list(engine.model.names)
                if hasattr(engine.model, "names")
                else str(engine.model),
                "kernel": engine.kernel.name,
                "n": design.n,
                "points": design.points,
                "brownian_time_points": engine.native_points(design.points),
                "weight_vectors": weights.vectors,
                "scaled_weight_vectors": weights.scaled,
            }
        )
    record = {
        "task": task,
        "seed": seed,
        "p": problem.p,
        "interval": {"a": problem.interval.a, "b": problem.interval.b},
        "criterion": {"value": report.value, "argmax_t": report.argmax_t},
        "groups": groups,
    }
    if search is not None:
        record["optimizer"] = {
            "evaluations": search.evaluations,
            "best_value_history": search.history,
        }
    return _round_floats(record)


def _write_json(record: dict, path: Path) -> None:
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run(config_path) -> int:
    """Execute the task described by a config file; returns the exit code."""
    try:
        config = _load_json(Path(config_path))
        _check_keys(config, _TOP_KEYS, "config")
        task = str(_require(config, "task", "config"))
        if task not in TASKS:
            raise ConfigError(f"task: expected one of {TASKS}, got {task!r}")
        seed = config.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError(f"seed: expected an integer, got {seed!r}")
        interval = _build_interval(config)
        model1, kernel1, n1 = _build_group(config, "group1")
        model2, kernel2, n2 = _build_group(config, "group2")
        explicit = config.get("designs")
        if explicit is None and (n1 is None or n2 is None):
            raise ConfigError("config: give 'n' for both groups or explicit 'designs'")
        p = _parse_order(config)
        output_dir = Path(config.get("output_dir", "curvediff-output"))

        sizes = (n1, n2)
        designs = _build_designs(config, interval, sizes)
        try:
            problem = ComparisonProblem(
                model1=model1,
                model2=model2,
                kernel1=kernel1,
                kernel2=kernel2,
                interval=interval,
                n1=designs.group1.n,
                n2=designs.group2.n,
                p=p,
            )
        except ValueError as exc:
            raise ConfigError(f"config: {exc}") from None

        # Sections are schema-checked even when the task ignores them.
        pso = _build_pso(config, seed) if "pso" in config or task == "optimize" else None
        plan = None
        if task == "simulate":
            plan = _build_plan(config, problem, designs, seed)
        elif "simulation" in config:
            _check_keys(config["simulation"], _SIM_KEYS, "simulation")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        search = None
        if task == "optimize":
            search = optimize_design_pair(problem, pso)
            designs = search.best
            report = design_criterion(problem, designs)
        else:
            report = design_criterion(problem, designs)
        _write_json(
            _design_record(task, seed, problem, designs, report, search),
            output_dir / "design.json",
        )
        write_criterion_curve(report, output_dir / "criterion_curve.csv")
        if task == "simulate":
            summary = coverage_experiment(plan)
            write_band(summary, output_dir / "band.csv")
            write_summary(summary, output_dir / "summary.csv")
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="curvediff",
        description=(
            "Optimal sampling designs and estimator weights for comparing two "
            "regression curves observed with correlated Gaussian errors."
        ),
    )
    parser.add_argument("config", help="path to a JSON run configuration")
    args = parser.parse_args(argv)
    return run(args.config)


if __name__ == "__main__":
    sys.exit(main())
