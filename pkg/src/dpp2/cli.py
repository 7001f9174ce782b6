"""Command-line front end.

Subcommands: ``run`` (one experiment from a config file and/or flags),
``sweep`` (benchmark presets or custom sweeps over the noise schedule),
``dp-budget`` and ``dp-select`` (privacy accounting), ``validate-params``
(feasibility certificate for a parameter choice), and ``plot`` (summary
CSVs to a static SVG).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import (
    ConfigError,
    ExperimentConfig,
    build_network,
    build_problem,
    config_from_dict,
    load_config,
)
from .experiment import (
    PRESET_SWEEPS,
    preset_config,
    read_summary,
    run_experiment,
    run_sweep,
)
from .graph import GraphConnectivityError
from .privacy import dp_budget, select_dp_parameters
from .svgplot import Series, emit_plot
from .theory import AlgoParams, EtaSchedule, validate_parameters

__all__ = ["main", "cli_dispatch"]


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    """One flag per configuration field (overrides the config file)."""
    top = parser.add_argument_group("run settings")
    top.add_argument("--seed", type=int, help="master seed (mandatory if no config file)")
    top.add_argument("--output-dir", help="directory for CSV outputs")
    top.add_argument("--repeats", type=int, help="number of seeded repeats")
    top.add_argument("--label", help="output file label")
    prob = parser.add_argument_group("problem")
    prob.add_argument("--problem-kind", choices=["logistic", "quadratic_pl"])
    prob.add_argument("--n-nodes", type=int)
    prob.add_argument("--dimension", type=int)
    prob.add_argument("--samples-per-node", type=int)
    prob.add_argument("--data-seed", type=int)
    prob.add_argument("--reg-lambda", type=float)
    prob.add_argument("--reg-omega", type=float)
    prob.add_argument("--label-noise", type=float)
    prob.add_argument("--rank-deficit", type=int)
    net = parser.add_argument_group("network")
    net.add_argument("--network-kind", choices=["geometric", "path", "cycle", "complete", "file"])
    net.add_argument("--radius", type=float)
    net.add_argument("--graph-seed", type=int)
    net.add_argument("--edges-file")
    net.add_argument("--allow-disconnected", action="store_true", default=None)
    par = parser.add_argument_group("algorithm parameters")
    par.add_argument("--alpha", type=float)
    par.add_argument("--beta", help="number, or 'auto'")
    par.add_argument("--rho", type=float)
    par.add_argument("--eta", help="number in (0,1), or 'random'")
    par.add_argument("--eta-seed", type=int)
    par.add_argument("--horizon", type=int)
    noi = parser.add_argument_group("noise schedule")
    noi.add_argument("--u-e", type=float)
    noi.add_argument("--u-w", type=float)
    noi.add_argument("--decay", type=float)
    tra = parser.add_argument_group("tracing")
    tra.add_argument("--cadence", type=int)
    tra.add_argument("--dense", action="store_true", default=None)
    tra.add_argument("--c-theta", type=float)
    tra.add_argument("--gamma", type=float)


_OVERRIDE_MAP = {
    "seed": ("seed",),
    "output_dir": ("output_dir",),
    "repeats": ("repeats",),
    "label": ("label",),
    "problem_kind": ("problem", "kind"),
    "n_nodes": ("problem", "n_nodes"),
    "dimension": ("problem", "dimension"),
    "samples_per_node": ("problem", "samples_per_node"),
    "data_seed": ("problem", "data_seed"),
    "reg_lambda": ("problem", "reg_lambda"),
    "reg_omega": ("problem", "reg_omega"),
    "label_noise": ("problem", "label_noise"),
    "rank_deficit": ("problem", "rank_deficit"),
    "network_kind": ("network", "kind"),
    "radius": ("network", "radius"),
    "graph_seed": ("network", "graph_seed"),
    "edges_file": ("network", "edges_file"),
    "allow_disconnected": ("network", "allow_disconnected"),
    "alpha": ("params", "alpha"),
    "beta": ("params", "beta"),
    "rho": ("params", "rho"),
    "eta": ("params", "eta"),
    "eta_seed": ("params", "eta_seed"),
    "horizon": ("params", "horizon"),
    "u_e": ("noise", "u_e"),
    "u_w": ("noise", "u_w"),
    "decay": ("noise", "decay"),
    "cadence": ("trace", "cadence"),
    "dense": ("trace", "dense"),
    "c_theta": ("trace", "c_theta"),
    "gamma": ("trace", "gamma"),
}


def _parse_maybe_number(text):
    if text is None or not isinstance(text, str):
        return text
    try:
        return float(text)
    except ValueError:
        return text


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        raw = load_config(args.config).to_dict()
    for attr, path in _OVERRIDE_MAP.items():
        value = getattr(args, attr, None)
        if value is None:
            continue
        if attr in ("beta", "eta"):
            value = _parse_maybe_number(value)
        target = raw
        for key in path[:-1]:
            target = target.setdefault(key, {})
        target[path[-1]] = value
    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("seed: pass --seed or provide a config file with one")
    return config_from_dict(raw)


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run_experiment(config, quiet=False)
    print(f"config hash: {result.config_hash}")
    for path in result.trace_paths:
        print(f"wrote {path}")
    print(f"wrote {result.summary_path}")
    print(
        f"final gap: mean={result.final_gap_mean!r} "
        f"min={result.final_gap_min!r} max={result.final_gap_max!r}"
    )
    return 0


def _cmd_sweep(args) -> int:
    if args.preset:
        base, parameter, values = preset_config(
            args.preset,
            seed=args.seed if args.seed is not None else 2024,
            output_dir=args.output_dir or "out",
            horizon=args.horizon if args.horizon is not None else 2000,
            repeats=args.repeats if args.repeats is not None else 10,
            paper_scale=args.paper_scale,
        )
    else:
        if not args.sweep_param or not args.sweep_values:
            raise ConfigError(
                "sweep: pass --preset, or both --sweep-param and --sweep-values"
            )
        base = _config_from_args(args)
        parameter = args.sweep_param
        values = [float(v) for v in args.sweep_values.split(",")]
    sweep = run_sweep(base, parameter, values, quiet=False)
    print(f"wrote {sweep.summary_path}")
    for value, result in zip(sweep.values, sweep.results):
        print(f"{parameter}={value:g}: final gap mean={result.final_gap_mean!r}")
    if args.plot:
        out = Path(base.output_dir) / f"plot_{base.label}.svg"
        series = [
            Series.make(f"{parameter}={value:g}", r.summary["k"], r.summary["What_mean"])
            for value, r in zip(sweep.values, sweep.results)
        ]
        out.write_text(emit_plot(series, title=base.label), encoding="ascii")
        print(f"wrote {out}")
    return 0


def _cmd_dp_budget(args) -> int:
    report = dp_budget(
        horizon=args.horizon, dimension=args.dimension, alpha=args.alpha,
        delta=args.delta, m_bar=args.m_bar, u_e=args.u_e, u_w=args.u_w,
        r=args.decay, epsilon_target=args.epsilon_target,
    )
    print(report.to_text())
    epsilon = report.epsilon
    print(f"epsilon = {epsilon:g}" if epsilon != float("inf") else "epsilon = inf")
    return 0 if report.feasible else 1


def _cmd_dp_select(args) -> int:
    report = select_dp_parameters(
        epsilon_target=args.epsilon_target, delta=args.delta,
        dimension=args.dimension, m_bar=args.m_bar, horizon=args.horizon,
        u_w=args.u_w,
    )
    print(report.to_text())
    return 0 if report.feasible else 1


def _cmd_validate(args) -> int:
    config = _config_from_args(args)
    network = build_network(config)
    if args.m_bar is not None:
        m_bar = args.m_bar
    else:
        m_bar = build_problem(config).smoothness_max
    beta = _parse_maybe_number(args.beta) if args.beta is not None else config.params.beta
    if beta == "auto" or beta is None:
        from .config import AUTO_BETA_FRACTION

        beta = AUTO_BETA_FRACTION * config.params.alpha / network.lambda_max
    params = AlgoParams(
        alpha=config.params.alpha, beta=float(beta), rho=config.params.rho,
        eta=EtaSchedule.constant(0.5), horizon=0,
    )
    constants = validate_parameters(
        params, network, m_bar,
        c_theta=config.trace.c_theta, gamma=config.trace.gamma,
    )
    print(constants.to_text())
    return 0


def _cmd_plot(args) -> int:
    series = []
    for path in args.summaries:
        columns, meta = read_summary(path)
        if args.y_column not in columns:
            raise ConfigError(f"{path}: no column {args.y_column!r}")
        label = meta.get("label", Path(path).stem)
        series.append(Series.make(label, columns[args.x_column], columns[args.y_column]))
    svg = emit_plot(series, title=args.title, x_label=args.x_column, y_label=args.y_column)
    Path(args.out).write_text(svg, encoding="ascii")
    print(f"wrote {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpp2",
        description=(
            "Decentralized proximal primal-dual optimization with double "
            "privacy protection: simulator, privacy accounting, benchmarks."
        ),
    )
    sub = parser.add_subparsers(dest="command")

    p_run = sub.add_parser("run", help="run one experiment (config file and/or flags)")
    p_run.add_argument("--config", help="YAML config file")
    _add_override_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep the noise schedule (presets available)")
    p_sweep.add_argument("--preset", choices=sorted(PRESET_SWEEPS))
    p_sweep.add_argument("--paper-scale", action="store_true",
                         help="full-size benchmark instance (N=50, d=10, m=200)")
    p_sweep.add_argument("--config", help="YAML config file (custom sweeps)")
    p_sweep.add_argument("--sweep-param", choices=["decay", "magnitude"])
    p_sweep.add_argument("--sweep-values", help="comma-separated values")
    p_sweep.add_argument("--plot", action="store_true", help="also emit an SVG plot")
    _add_override_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_budget = sub.add_parser("dp-budget", help="privacy budget over a finite horizon")
    p_budget.add_argument("--horizon", type=int, required=True, help="iteration count K")
    p_budget.add_argument("--dimension", type=int, required=True)
    p_budget.add_argument("--alpha", type=float, required=True)
    p_budget.add_argument("--delta", type=float, required=True,
                          help="adjacency bound on gradient perturbations (no default)")
    p_budget.add_argument("--m-bar", type=float, required=True, help="max smoothness constant")
    p_budget.add_argument("--u-e", type=float, required=True)
    p_budget.add_argument("--u-w", type=float, required=True)
    p_budget.add_argument("--decay", type=float, required=True, help="noise decay rate r")
    p_budget.add_argument("--epsilon-target", type=float)
    p_budget.set_defaults(func=_cmd_dp_budget)

    p_select = sub.add_parser("dp-select", help="parameters meeting a privacy budget")
    p_select.add_argument("--epsilon-target", type=float, required=True)
    p_select.add_argument("--delta", type=float, required=True,
                          help="adjacency bound on gradient perturbations (no default)")
    p_select.add_argument("--dimension", type=int, required=True)
    p_select.add_argument("--m-bar", type=float, required=True)
    p_select.add_argument("--horizon", type=int, required=True)
    p_select.add_argument("--u-w", type=float, required=True)
    p_select.set_defaults(func=_cmd_dp_select)

    p_val = sub.add_parser("validate-params", help="feasibility certificate for (alpha, beta, rho)")
    p_val.add_argument("--config", help="YAML config file")
    p_val.add_argument("--m-bar", type=float, help="skip problem construction, use this bound")
    _add_override_flags(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_plot = sub.add_parser("plot", help="summary CSVs to a static SVG")
    p_plot.add_argument("summaries", nargs="+", help="summary CSV files")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--x-column", default="k")
    p_plot.add_argument("--y-column", default="What_mean")
    p_plot.add_argument("--title", default="")
    p_plot.set_defaults(func=_cmd_plot)
    return parser


def cli_dispatch(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, GraphConnectivityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch())
