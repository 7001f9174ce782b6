"""Experiment configuration: schema, defaults, YAML I/O, canonical hashing.

A configuration is a nested mapping with sections ``problem``, ``network``,
``params``, ``noise``, ``trace`` plus top-level ``seed`` (mandatory),
``output_dir``, ``repeats``, and ``label``. Two identical configurations
produce byte-identical outputs: every random quantity traces to an explicit
seed, and the canonical hash of the normalized mapping is embedded in every
file the harness writes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
import yaml

from .graph import (
    Network,
    build_laplacian,
    complete_edges,
    cycle_edges,
    load_edge_list,
    path_edges,
    random_geometric_graph,
)
from .privacy import NoiseSchedule
from .problems import Problem, generate_dataset, logistic_nonconvex, quadratic_pl
from .theory import AlgoParams, EtaSchedule

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "save_config",
    "config_from_dict",
    "build_network",
    "build_problem",
    "build_params",
    "build_noise",
    "run_seed_for",
]

#: fraction of alpha / lambda_max(P) used when beta is "auto"
AUTO_BETA_FRACTION = 0.1


class ConfigError(ValueError):
    """A configuration field failed validation; the message names the field."""


@dataclass
class ProblemSpec:
    kind: str = "logistic"
    n_nodes: int = 10
    dimension: int = 5
    samples_per_node: int = 50
    data_seed: int = 11
    reg_lambda: float = 0.001
    reg_omega: float = 1.0
    label_noise: float = 1.0
    rank_deficit: int = 0


@dataclass
class NetworkSpec:
    kind: str = "geometric"
    radius: float = 0.5
    graph_seed: int = 3
    edges_file: str | None = None
    allow_disconnected: bool = False


@dataclass
class ParamSpec:
    alpha: float = 0.7
    beta: float | str = "auto"
    rho: float = 0.2
    eta: float | str = 0.5
    eta_seed: int | None = None
    horizon: int = 2000


@dataclass
class NoiseSpec:
    u_e: float | list = 1.0
    u_w: float | list = 1.0
    decay: float | list = 0.9


@dataclass
class TraceSpec:
    cadence: int = 1
    dense: bool = False
    c_theta: float | None = None
    gamma: float | None = None


@dataclass
class ExperimentConfig:
    seed: int
    output_dir: str = "out"
    repeats: int = 1
    label: str = "run"
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    network: NetworkSpec = field(default_factory=NetworkSpec)
    params: ParamSpec = field(default_factory=ParamSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    trace: TraceSpec = field(default_factory=TraceSpec)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """Canonical hash identifying the experiment.

        ``output_dir`` is excluded: it says where results land, not what
        they are, so the same experiment written twice hashes identically.
        """
        payload = self.to_dict()
        payload.pop("output_dir")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]


_SECTIONS = {
    "problem": ProblemSpec,
    "network": NetworkSpec,
    "params": ParamSpec,
    "noise": NoiseSpec,
    "trace": TraceSpec,
}


def config_from_dict(raw: dict[str, Any]) -> ExperimentConfig:
    """Build a validated config from a plain mapping; unknown keys are errors."""
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected a mapping")
    raw = dict(raw)
    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("seed: a master seed is mandatory in every config")
    known_top = {"seed", "output_dir", "repeats", "label"} | set(_SECTIONS)
    for key in raw:
        if key not in known_top:
            raise ConfigError(f"{key}: unknown top-level field")
    sections = {}
    for name, spec_cls in _SECTIONS.items():
        body = raw.get(name, {}) or {}
        if not isinstance(body, dict):
            raise ConfigError(f"{name}: expected a mapping of fields")
        valid = {f for f in spec_cls.__dataclass_fields__}
        for key in body:
            if key not in valid:
                raise ConfigError(f"{name}.{key}: unknown field")
        sections[name] = spec_cls(**body)
    config = ExperimentConfig(
        seed=int(raw["seed"]),
        output_dir=str(raw.get("output_dir", "out")),
        repeats=int(raw.get("repeats", 1)),
        label=str(raw.get("label", "run")),
        **sections,
    )
    _validate(config)
    return config


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{path}: {message}")


def _validate(config: ExperimentConfig) -> None:
    p, n, a, z, t = config.problem, config.network, config.params, config.noise, config.trace
    _require(config.repeats >= 1, "repeats", "must be >= 1")
    _require(p.kind in ("logistic", "quadratic_pl"), "problem.kind",
             "must be 'logistic' or 'quadratic_pl'")
    _require(p.n_nodes >= 1, "problem.n_nodes", "must be positive")
    _require(p.dimension >= 1, "problem.dimension", "must be positive")
    _require(p.samples_per_node >= 1, "problem.samples_per_node", "must be positive")
    _require(p.reg_lambda >= 0, "problem.reg_lambda", "must be nonnegative")
    _require(p.reg_omega > 0, "problem.reg_omega", "must be positive")
    _require(0 <= p.rank_deficit < p.dimension, "problem.rank_deficit",
             "must satisfy 0 <= rank_deficit < dimension")
    _require(n.kind in ("geometric", "path", "cycle", "complete", "file"),
             "network.kind", "must be geometric|path|cycle|complete|file")
    if n.kind == "geometric":
        _require(n.radius > 0, "network.radius", "must be positive")
    if n.kind == "file":
        _require(bool(n.edges_file), "network.edges_file", "required for kind 'file'")
    _require(a.alpha > 0, "params.alpha", "must be positive")
    if isinstance(a.beta, str):
        _require(a.beta == "auto", "params.beta", "must be a number or 'auto'")
    else:
        _require(a.beta >= 0, "params.beta", "must be nonnegative")
    _require(a.rho > 0, "params.rho", "must be positive")
    if isinstance(a.eta, str):
        _require(a.eta == "random", "params.eta", "must be a number in (0,1) or 'random'")
    else:
        _require(0 < a.eta < 1, "params.eta", "must lie in (0, 1)")
    _require(a.horizon >= 0, "params.horizon", "must be nonnegative")
    for field_name, value in (("u_e", z.u_e), ("u_w", z.u_w)):
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        _require(bool(np.all(arr >= 0)), f"noise.{field_name}", "must be nonnegative")
    decay = np.atleast_1d(np.asarray(z.decay, dtype=float))
    _require(bool(np.all((decay >= 0) & (decay < 1))), "noise.decay", "must lie in [0, 1)")
    _require(t.cadence >= 1, "trace.cadence", "must be >= 1")


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as handle:
        raw = yaml.safe_load(handle)
    if raw is None:
        raise ConfigError(f"{path}: empty config file")
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_dict(), handle, sort_keys=True)


def build_network(config: ExperimentConfig) -> Network:
    spec = config.network
    n = config.problem.n_nodes
    if spec.kind == "geometric":
        edges = random_geometric_graph(n, spec.radius, seed=spec.graph_seed)
    elif spec.kind == "path":
        edges = path_edges(n)
    elif spec.kind == "cycle":
        edges = cycle_edges(n)
    elif spec.kind == "complete":
        edges = complete_edges(n)
    else:
        file_n, edges = load_edge_list(spec.edges_file)
        if file_n != n:
            raise ConfigError(
                f"network.edges_file: file has {file_n} nodes, problem.n_nodes is {n}"
            )
    return build_laplacian(edges, n)


def build_problem(config: ExperimentConfig) -> Problem:
    spec = config.problem
    if spec.kind == "logistic":
        dataset = generate_dataset(
            spec.n_nodes, spec.dimension, spec.samples_per_node,
            seed=spec.data_seed, label_noise=spec.label_noise,
        )
        return logistic_nonconvex(dataset, lam=spec.reg_lambda, omega=spec.reg_omega)
    return quadratic_pl(
        spec.n_nodes, spec.dimension, rank_deficit=spec.rank_deficit, seed=spec.data_seed
    )


def build_params(config: ExperimentConfig, network: Network) -> AlgoParams:
    spec = config.params
    beta = spec.beta
    if beta == "auto":
        beta = AUTO_BETA_FRACTION * spec.alpha / network.lambda_max
    if isinstance(spec.eta, str):
        # with eta_seed unset the runner derives the seed from the run seed
        eta = EtaSchedule.random(seed=spec.eta_seed)
    else:
        eta = EtaSchedule.constant(float(spec.eta))
    return AlgoParams(
        alpha=float(spec.alpha), beta=float(beta), rho=float(spec.rho),
        eta=eta, horizon=int(spec.horizon),
    )


def build_noise(config: ExperimentConfig, n_nodes: int) -> NoiseSchedule:
    spec = config.noise
    def per_node(value):
        arr = np.atleast_1d(np.asarray(value, dtype=float))
        if arr.size == 1:
            arr = np.full(n_nodes, float(arr[0]))
        if arr.size != n_nodes:
            raise ConfigError(f"noise: per-node lists must have length {n_nodes}")
        return arr
    return NoiseSchedule(
        u_e=per_node(spec.u_e), u_w=per_node(spec.u_w), r=per_node(spec.decay)
    )


def run_seed_for(master_seed: int, repeat: int) -> int:
    """Derived per-repeat run seed, shared across sweep values.

    Sweeps vary only the swept field, so repeat ``r`` of every sweep value
    consumes identical noise streams (paired comparisons across values).
    """
    seq = np.random.SeedSequence([int(master_seed), int(repeat)])
    return int(seq.generate_state(1, np.uint64)[0])
