"""The decentralized proximal primal-dual iteration with double privacy protection.

One iteration, at every node i (synchronous, all reads from the previous
iterate):

    w_i ~ Lap(theta_w_i^k),  e_i ~ Lap(theta_e_i^k)
    y_i = x_i + (1 - eta_k) d_i + w_i                      -> sent to neighbors
    z_i = grad f_i(x_i) + eta_k q_i + rho * (P y)_i + e_i  -> sent to neighbors
    x_i <- x_i + w_i - alpha (z_i - e_i) + beta (P z)_i
    d_i <- eta_k d_i + y_i
    q_i <- eta_k q_i + rho (P y)_i

The aggregation (P y) is computed once and reused for both z and q. Raw
decisions and gradients never appear on the wire: the first protection tier
merges the dual variables into both messages, the second adds the decaying
Laplace perturbations.

With q0 = d0 = 0 the same primal trajectory is generated, for any eta
sequence, by the two-variable recursion of :func:`step_equivalent`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import DenseAnalysis, Trace, optimality_gap
from .graph import Network
from .privacy import NoiseSchedule, NoiseStreams
from .problems import Problem
from .theory import AlgoParams, DerivedConstants, EtaSchedule

__all__ = [
    "AlgState",
    "TraceConfig",
    "GradientBlowupError",
    "initial_state",
    "step",
    "step_equivalent",
    "run",
]


class GradientBlowupError(RuntimeError):
    """A gradient evaluation produced NaN or Inf."""


@dataclass(frozen=True)
class AlgState:
    """Full per-node state after ``k`` iterations.

    ``x`` is the primal stack, ``d`` and ``q`` the merged and
    penalty-weighted dual stacks (all (N, d)). ``y``/``z`` are the messages
    of the last executed iteration and ``w``/``e`` the noise realizations it
    consumed; all four are None before the first step.
    """

    k: int
    x: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)
    y: np.ndarray | None = field(default=None, repr=False)
    z: np.ndarray | None = field(default=None, repr=False)
    w: np.ndarray | None = field(default=None, repr=False)
    e: np.ndarray | None = field(default=None, repr=False)


def initial_state(network: Network, dimension: int, x0: np.ndarray | None = None) -> AlgState:
    """State at k=0: d = q = 0 and arbitrary x0 (default zero)."""
    shape = (network.n, dimension)
    if x0 is None:
        x = np.zeros(shape)
    else:
        x = np.array(x0, dtype=float)
        if x.shape != shape:
            raise ValueError(f"x0 must have shape {shape}, got {x.shape}")
    return AlgState(k=0, x=x, d=np.zeros(shape), q=np.zeros(shape))


def _checked_gradient(problem: Problem, x: np.ndarray, k: int) -> np.ndarray:
    grad = problem.gradient(x)
    if not np.all(np.isfinite(grad)):
        bad = np.where(~np.isfinite(grad).all(axis=1))[0]
        raise GradientBlowupError(
            f"non-finite gradient at iteration {k} for node(s) {[int(b) + 1 for b in bad]}"
        )
    return grad


def step(
    state: AlgState,
    params: AlgoParams,
    network: Network,
    problem: Problem,
    streams: NoiseStreams,
    grad: np.ndarray | None = None,
) -> AlgState:
    """Execute one full iteration (message construction included).

    ``streams`` must be positioned at iteration ``state.k``; pass ``grad``
    to reuse a gradient stack already evaluated at ``state.x``.
    """
    k = state.k
    eta = params.eta.at(k)
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta at iteration {k} must lie in (0, 1), got {eta!r}")
    w, e = streams.sample(k)
    if grad is None:
        grad = _checked_gradient(problem, state.x, k)
    y = state.x + (1.0 - eta) * state.d + w
    mixed_y = network.mix(y)
    z = grad + eta * state.q + params.rho * mixed_y + e
    mixed_z = network.mix(z)
    x_next = state.x + w - params.alpha * (z - e) + params.beta * mixed_z
    d_next = eta * state.d + y
    q_next = eta * state.q + params.rho * mixed_y
    return AlgState(k=k + 1, x=x_next, d=d_next, q=q_next, y=y, z=z, w=w, e=e)


def step_equivalent(
    x: np.ndarray,
    q: np.ndarray,
    w: np.ndarray,
    e: np.ndarray,
    params: AlgoParams,
    network: Network,
    problem: Problem,
) -> tuple[np.ndarray, np.ndarray]:
    """One iteration of the eta-free two-variable recursion.

        x' = x + w - G(grad(x) + q + rho L (x + w)) + beta L e
        q' = q + rho L (x + w)

    with ``G v = alpha v - beta L v`` applied blockwise. Feeding the same
    noise realizations that :func:`step` consumed reproduces its primal
    trajectory (started from q0 = d0 = 0) to rounding error.
    """
    grad = _checked_gradient(problem, x, k=-1)
    shifted = x + w
    inner = grad + q + params.rho * network.mix(shifted)
    g_inner = params.alpha * inner - params.beta * network.mix(inner)
    x_next = shifted - g_inner + params.beta * network.mix(e)
    q_next = q + params.rho * network.mix(shifted)
    return x_next, q_next


@dataclass
class TraceConfig:
    """What the runner records.

    ``cadence`` thins the recorded rows (row 0 and the final row are always
    kept; running averages are maintained every iteration regardless).
    ``dense=True`` evaluates the Lyapunov certificate and descent residual
    each iteration, which needs ``constants`` and, for problems without a
    known optimum, labels the column as surrogate-based.
    """

    cadence: int = 1
    dense: bool = False
    constants: DerivedConstants | None = None

    def __post_init__(self):
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")
        if self.dense and self.constants is None:
            raise ValueError("dense tracing requires derived constants")


def run(
    problem: Problem,
    network: Network,
    params: AlgoParams,
    noise: NoiseSchedule,
    seed: int,
    trace_config: TraceConfig | None = None,
    x0: np.ndarray | None = None,
    allow_disconnected: bool = False,
    meta: dict[str, str] | None = None,
) -> Trace:
    """Drive the iteration for ``params.horizon`` steps and collect a trace.

    Deterministic given ``seed``: per-node noise streams and (when
    requested) the random eta sequence are spawned from it. A disconnected
    network is refused unless ``allow_disconnected`` is set.
    """
    if problem.n_nodes != network.n:
        raise ValueError("problem and network disagree on the node count")
    if noise.n_nodes != network.n:
        raise ValueError("noise schedule and network disagree on the node count")
    if not network.connected and not allow_disconnected:
        raise ValueError(
            "network is flagged disconnected; pass allow_disconnected=True to run anyway"
        )
    trace_config = trace_config or TraceConfig()
    horizon = params.horizon

    seed_seq = np.random.SeedSequence(seed)
    noise_seq, eta_seq = seed_seq.spawn(2)
    streams = NoiseStreams(noise, noise_seq, problem.dimension)
    eta = params.eta
    if eta.kind == "random" and eta.seed is None:
        eta = EtaSchedule.random(seed=int(eta_seq.generate_state(1)[0]))
        params = replace(params, eta=eta)

    dense: DenseAnalysis | None = None
    constants = trace_config.constants
    if trace_config.dense:
        f_star = problem.f_star if problem.f_star is not None else 0.0
        dense = DenseAnalysis(network, problem, constants, f_star=f_star)

    state = initial_state(network, problem.dimension, x0=x0)
    rows: list[dict[str, float]] = []
    gap_cumsum = 0.0
    prev_quad_v = float("nan")
    prev_w_sq = prev_e_sq = float("nan")

    for k in range(horizon + 1):
        grad = _checked_gradient(problem, state.x, k)
        with np.errstate(over="ignore", invalid="ignore"):
            gap, consensus, stationarity = optimality_gap(state.x, grad)
        if not np.isfinite(gap):
            raise GradientBlowupError(
                f"optimality gap overflowed at iteration {k}; iterate is diverging"
            )
        gap_cumsum += gap
        xbar = state.x.mean(axis=0)
        objective = problem.value_at(xbar)
        if dense is not None:
            quad_v, _ = dense.lyapunov_parts(state.x, state.q)
            residual = (
                quad_v - prev_quad_v - constants.d1 * prev_w_sq - constants.d2 * prev_e_sq
                if k > 0
                else float("nan")
            )
        else:
            quad_v = residual = float("nan")

        last = k == horizon
        if last:
            w_sq = e_sq = float("nan")
        else:
            state = step(state, params, network, problem, streams, grad=grad)
            if not np.all(np.isfinite(state.x)):
                raise GradientBlowupError(f"iterate diverged to non-finite values at iteration {k + 1}")
            w_sq = float((state.w**2).sum())
            e_sq = float((state.e**2).sum())

        if k % trace_config.cadence == 0 or last:
            rows.append(
                {
                    "k": float(k),
                    "What": gap,
                    "What_avg": gap_cumsum / (k + 1),
                    "consensus": consensus,
                    "stationarity": stationarity,
                    "objective": objective,
                    "V": quad_v,
                    "descent_residual": residual,
                    "w_norm_sq": w_sq,
                    "e_norm_sq": e_sq,
                }
            )
        prev_quad_v, prev_w_sq, prev_e_sq = quad_v, w_sq, e_sq

    columns = {name: np.array([row[name] for row in rows]) for name in rows[0]}
    f_star_kind = "none"
    if dense is not None:
        if problem.f_star is not None:
            shift = problem.f_star
            f_star_kind = "exact"
        else:
            # best objective value seen in this run stands in for the optimum
            shift = float(columns["objective"].min())
            f_star_kind = "surrogate"
        columns["V"] = columns["V"] - shift

    trace_meta = {
        "seed": str(seed),
        "n_nodes": str(network.n),
        "dimension": str(problem.dimension),
        "horizon": str(horizon),
        "alpha": repr(params.alpha),
        "beta": repr(params.beta),
        "rho": repr(params.rho),
        "eta": params.eta.describe(),
        "noise_u_bar": repr(noise.u_bar),
        "noise_r_bar": repr(noise.r_bar),
        "problem": problem.kind,
        "f_star_kind": f_star_kind,
        "cadence": str(trace_config.cadence),
    }
    if meta:
        trace_meta.update(meta)
    return Trace(columns=columns, meta=trace_meta)
