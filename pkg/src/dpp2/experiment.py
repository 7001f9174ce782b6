"""Experiment driver: seeded repeats, sweeps, summary CSVs, presets.

Every run writes one trace CSV; repeats are aggregated into a summary CSV
with a mean curve and a min/max envelope. A sweep repeats the whole bundle
for each value of one noise field and collects the final-gap statistics in
a sweep summary. Outputs are pure functions of the configuration: per-repeat
run seeds derive from (master seed, repeat index) only, so sweep values are
compared under identical noise streams.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algorithm import TraceConfig, run
from .config import (
    ExperimentConfig,
    build_network,
    build_noise,
    build_params,
    build_problem,
    run_seed_for,
)
from .diagnostics import Trace
from .theory import DerivedConstants, validate_parameters

__all__ = [
    "ExperimentResult",
    "SweepResult",
    "run_experiment",
    "run_sweep",
    "read_summary",
    "preset_config",
    "PRESET_SWEEPS",
]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    config_hash: str
    traces: list[Trace]
    trace_paths: list[Path]
    summary_path: Path
    summary: dict[str, np.ndarray]
    validator_report: str
    final_gap_mean: float
    final_gap_min: float
    final_gap_max: float


@dataclass
class SweepResult:
    parameter: str
    values: list[float]
    results: list[ExperimentResult] = field(repr=False)
    summary_path: Path | None = None


def _write_summary(path: Path, columns: dict[str, np.ndarray], meta: dict[str, str]) -> None:
    names = list(columns)
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        for key in sorted(meta):
            handle.write(f"# {key}: {meta[key]}\n")
        handle.write(",".join(names) + "\n")
        for row in range(len(columns[names[0]])):
            cells = []
            for name in names:
                value = columns[name][row]
                cells.append(str(int(value)) if name == "k" else repr(float(value)))
            handle.write(",".join(cells) + "\n")


def read_summary(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    meta: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, encoding="ascii") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(cell) for cell in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}, meta


def run_experiment(config: ExperimentConfig, quiet: bool = True) -> ExperimentResult:
    """Execute ``config.repeats`` seeded runs and write traces plus a summary."""
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    network = build_network(config)
    problem = build_problem(config)
    params = build_params(config, network)
    noise = build_noise(config, network.n)
    config_hash = config.config_hash()

    constants: DerivedConstants | None = None
    if network.connected:
        constants = validate_parameters(
            params, network, problem.smoothness_max,
            c_theta=config.trace.c_theta, gamma=config.trace.gamma,
            nu=problem.pl_constant, r_bar=noise.r_bar,
        )
        validator_report = constants.to_text()
        if not constants.certified and not quiet:
            print("warning: parameters are outside the certified ranges (run proceeds)")
    else:
        validator_report = "network disconnected: certificate not evaluated"
    if not quiet:
        print(validator_report)

    trace_config = TraceConfig(
        cadence=config.trace.cadence,
        dense=config.trace.dense,
        constants=constants if config.trace.dense else None,
    )

    traces: list[Trace] = []
    trace_paths: list[Path] = []
    for repeat in range(config.repeats):
        seed = run_seed_for(config.seed, repeat)
        trace = run(
            problem, network, params, noise, seed=seed,
            trace_config=trace_config,
            allow_disconnected=config.network.allow_disconnected,
            meta={
                "config_hash": config_hash,
                "label": config.label,
                "repeat": str(repeat),
                "master_seed": str(config.seed),
            },
        )
        path = out_dir / f"trace_{config.label}_rep{repeat:02d}.csv"
        trace.write_csv(path)
        traces.append(trace)
        trace_paths.append(path)

    ks = traces[0].column("k")
    gap_stack = np.stack([t.column("What") for t in traces])
    objective_stack = np.stack([t.column("objective") for t in traces])
    summary = {
        "k": ks,
        "What_mean": gap_stack.mean(axis=0),
        "What_min": gap_stack.min(axis=0),
        "What_max": gap_stack.max(axis=0),
        "objective_mean": objective_stack.mean(axis=0),
    }
    summary_path = out_dir / f"summary_{config.label}.csv"
    _write_summary(
        summary_path, summary,
        meta={
            "config_hash": config_hash,
            "label": config.label,
            "repeats": str(config.repeats),
            "master_seed": str(config.seed),
        },
    )
    return ExperimentResult(
        config=config,
        config_hash=config_hash,
        traces=traces,
        trace_paths=trace_paths,
        summary_path=summary_path,
        summary=summary,
        validator_report=validator_report,
        final_gap_mean=float(gap_stack[:, -1].mean()),
        final_gap_min=float(gap_stack[:, -1].min()),
        final_gap_max=float(gap_stack[:, -1].max()),
    )


_SWEEP_FIELDS = {
    "decay": "decay",
    "magnitude": "magnitude",
}


def run_sweep(
    base: ExperimentConfig,
    parameter: str,
    values: list[float],
    quiet: bool = True,
) -> SweepResult:
    """Repeat the experiment for each value of one noise field.

    ``parameter`` is ``decay`` (the shared noise decay rate) or ``magnitude``
    (the shared initial scale applied to both channels). Results are written
    under the base output directory with value-tagged labels, plus a
    ``sweep_<parameter>.csv`` of final-gap statistics.
    """
    if parameter not in _SWEEP_FIELDS:
        raise ValueError("sweep parameter must be 'decay' or 'magnitude'")
    if not values:
        raise ValueError("sweep needs at least one value")
    results = []
    for value in values:
        config = copy.deepcopy(base)
        tag = f"{value:g}".replace(".", "p").replace("-", "m")
        config.label = f"{base.label}_{parameter}{tag}"
        if parameter == "decay":
            config.noise.decay = float(value)
        else:
            config.noise.u_e = float(value)
            config.noise.u_w = float(value)
        if not quiet:
            print(f"sweep {parameter} = {value:g}")
        results.append(run_experiment(config, quiet=quiet))
    out_dir = Path(base.output_dir)
    summary_path = out_dir / f"sweep_{parameter}.csv"
    columns = {
        "value": np.array(values, dtype=float),
        "final_What_mean": np.array([r.final_gap_mean for r in results]),
        "final_What_min": np.array([r.final_gap_min for r in results]),
        "final_What_max": np.array([r.final_gap_max for r in results]),
    }
    names = list(columns)
    with open(summary_path, "w", encoding="ascii", newline="\n") as handle:
        handle.write(f"# label: {base.label}\n# parameter: {parameter}\n")
        handle.write(f"# master_seed: {base.seed}\n")
        handle.write(",".join(names) + "\n")
        for row in range(len(values)):
            handle.write(",".join(repr(float(columns[n][row])) for n in names) + "\n")
    return SweepResult(parameter=parameter, values=list(values), results=results,
                       summary_path=summary_path)


#: the two benchmark sweeps: noise decay rate at fixed magnitude, and noise
#: magnitude at fixed decay rate
PRESET_SWEEPS = {
    "figure1": ("decay", [0.0, 0.5, 0.9, 0.95, 0.97, 0.98, 0.99]),
    "figure2": ("magnitude", [0.0, 0.1, 0.3, 0.6, 1.0, 3.0, 5.0]),
}


def preset_config(
    name: str,
    seed: int = 2024,
    output_dir: str = "out",
    horizon: int = 2000,
    repeats: int = 10,
    paper_scale: bool = False,
) -> tuple[ExperimentConfig, str, list[float]]:
    """Benchmark preset: returns (base config, sweep parameter, sweep values).

    The desk scale (default) uses a 10-node geometric network on the
    nonconvex classification benchmark; ``paper_scale`` restores the full
    50-node, d=10, m=200 instance with a correspondingly gentler stepsize.
    """
    if name not in PRESET_SWEEPS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESET_SWEEPS)}")
    parameter, values = PRESET_SWEEPS[name]
    base = ExperimentConfig(seed=seed, output_dir=output_dir, repeats=repeats, label=name)
    base.trace.cadence = 50
    base.params.horizon = horizon
    if paper_scale:
        base.problem.n_nodes = 50
        base.problem.dimension = 10
        base.problem.samples_per_node = 200
        base.network.radius = 0.3
        base.network.graph_seed = 1
        base.params.alpha = 0.25
        base.params.rho = 0.05
    if name == "figure1":
        base.noise.u_e = 1.0
        base.noise.u_w = 1.0
    else:
        base.noise.decay = 0.95
    return base, parameter, values
