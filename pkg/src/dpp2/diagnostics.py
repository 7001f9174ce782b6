"""Analysis-side quantities: optimality gap, Lyapunov certificate, rate fits.

Dense matrices (the consensus projector, the step operator, the penalty
pseudoinverse) are confined to this module and size-gated; the algorithm
core never touches them. All quantities are assembled at the N x N level
and applied blockwise to (N, d) stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Network
from .problems import Problem
from .theory import DerivedConstants

__all__ = [
    "optimality_gap",
    "DenseAnalysis",
    "FitReport",
    "rate_fit",
    "Trace",
    "TRACE_COLUMNS",
]

#: largest N*d for which the dense analysis consents to run
DENSE_LIMIT = 4096


def optimality_gap(x_stack: np.ndarray, grad_stack: np.ndarray) -> tuple[float, float, float]:
    """(gap, consensus error, stationarity) at a per-node state.

    consensus = ||x - xbar||^2 with xbar the per-coordinate node average,
    stationarity = (1/N) * ||sum_i grad_i||^2, and the gap is exactly their
    sum.
    """
    x_stack = np.asarray(x_stack, dtype=float)
    grad_stack = np.asarray(grad_stack, dtype=float)
    if x_stack.shape != grad_stack.shape:
        raise ValueError("state and gradient stacks must have identical shapes")
    n = x_stack.shape[0]
    centered = x_stack - x_stack.mean(axis=0)
    consensus = float((centered**2).sum())
    grad_sum = grad_stack.sum(axis=0)
    stationarity = float((grad_sum**2).sum()) / n
    return consensus + stationarity, consensus, stationarity


class DenseAnalysis:
    """Materialized certificate matrices for one (network, constants) pair.

    Builds the consensus projector K, the averaging projector J, the step
    operator G, and the penalty pseudoinverse Q (eigenvalues below 1e-10
    treated as the consensus zero, so Q P = P Q = K). The Lyapunov value

        V = 0.5*||x||^2_K + 0.5*||s||^2_{(theta*G + G*Q/rho) K}
            + <x, 0.5*theta*K s> + f(xbar) - f_star,   s = q + grad_stack(xbar)

    certifies descent: under certified parameters and zero noise it is
    nonincreasing along the iteration, and with noise the increase is at
    most D1*||w||^2 + D2*||e||^2.
    """

    def __init__(
        self,
        network: Network,
        problem: Problem,
        constants: DerivedConstants,
        f_star: float | None = None,
    ):
        if network.n * problem.dimension > DENSE_LIMIT:
            raise ValueError(
                f"dense analysis refused: N*d = {network.n * problem.dimension} "
                f"exceeds the documented limit {DENSE_LIMIT}"
            )
        self.network = network
        self.problem = problem
        self.constants = constants
        if f_star is None:
            f_star = problem.f_star
        self.f_star = f_star
        n = network.n
        ones = np.ones((n, n)) / n
        self.J = ones
        self.K = np.eye(n) - ones
        self.G = constants.alpha * np.eye(n) - constants.beta * network.P
        eigenvalues, vectors = np.linalg.eigh(network.P)
        inverted = np.where(eigenvalues > 1e-10, 1.0, np.nan)
        with np.errstate(divide="ignore", invalid="ignore"):
            inverted = np.where(eigenvalues > 1e-10, 1.0 / eigenvalues, 0.0)
        self.Q = vectors @ np.diag(inverted) @ vectors.T
        theta, rho = constants.theta, constants.rho
        self._s_metric = (theta * self.G + self.G @ self.Q / rho) @ self.K

    def shifted_dual(self, x_stack: np.ndarray, q_stack: np.ndarray) -> np.ndarray:
        """s = q + per-node gradients evaluated at the node average."""
        xbar = x_stack.mean(axis=0)
        return q_stack + self.problem.gradient_at(xbar)

    def lyapunov_parts(self, x_stack: np.ndarray, q_stack: np.ndarray) -> tuple[float, float]:
        """(quadratic part + f(xbar), f(xbar)) -- f_star not yet subtracted.

        Splitting this way lets a run compute descent residuals online and
        subtract a surrogate optimum once the run is complete.
        """
        s = self.shifted_dual(x_stack, q_stack)
        kx = self.K @ x_stack
        quad = (
            0.5 * float((x_stack * kx).sum())
            + 0.5 * float((s * (self._s_metric @ s)).sum())
            + 0.5 * self.constants.theta * float((x_stack * (self.K @ s)).sum())
        )
        objective = self.problem.value_at(x_stack.mean(axis=0))
        return quad + objective, objective

    def lyapunov(self, x_stack: np.ndarray, q_stack: np.ndarray) -> float:
        """The Lyapunov value; requires a known (or surrogate) ``f_star``."""
        if self.f_star is None:
            raise ValueError("f_star unknown; pass a surrogate explicitly")
        value, _ = self.lyapunov_parts(x_stack, q_stack)
        return value - self.f_star

    def hat_v(self, x_stack: np.ndarray, q_stack: np.ndarray) -> float:
        """||x||^2_K + ||s||^2_K + f(xbar) - f_star, the sandwich comparator."""
        if self.f_star is None:
            raise ValueError("f_star unknown; pass a surrogate explicitly")
        s = self.shifted_dual(x_stack, q_stack)
        return (
            float((x_stack * (self.K @ x_stack)).sum())
            + float((s * (self.K @ s)).sum())
            + self.problem.value_at(x_stack.mean(axis=0))
            - self.f_star
        )


@dataclass(frozen=True)
class FitReport:
    mode: str
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_text(self) -> str:
        return (
            f"mode = {self.mode}\nslope = {self.slope!r}\n"
            f"intercept = {self.intercept!r}\nr_squared = {self.r_squared!r}\n"
            f"n_points = {self.n_points}"
        )


def rate_fit(
    ks: np.ndarray,
    values: np.ndarray,
    mode: str,
    burn_in: int = 0,
    floor: float = 1e-300,
) -> FitReport:
    """Least-squares rate fit of a metric sequence.

    ``sublinear`` regresses log(value) on log(k) (use the running average of
    the optimality gap; an exact power law c/k gives slope -1).  ``linear``
    regresses log(value) on k (an exact geometric decay c * t**k gives slope
    log(t), natural log). Entries at or below ``floor`` mark the numerical
    floor: the fit uses only the prefix before the first floored entry.
    """
    if mode not in ("sublinear", "linear"):
        raise ValueError("mode must be 'sublinear' or 'linear'")
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = ks >= burn_in
    if mode == "sublinear":
        keep &= ks > 0
    ks, values = ks[keep], values[keep]
    floored = values <= floor
    if floored.any():
        cut = int(np.argmax(floored))
        ks, values = ks[:cut], values[:cut]
    if ks.size < 2:
        raise ValueError("need at least 2 usable points past burn-in for a fit")
    abscissa = np.log(ks) if mode == "sublinear" else ks
    ordinate = np.log(values)
    slope, intercept = np.polyfit(abscissa, ordinate, 1)
    predicted = slope * abscissa + intercept
    total = float(((ordinate - ordinate.mean()) ** 2).sum())
    residual = float(((ordinate - predicted) ** 2).sum())
    r_squared = 1.0 - residual / total if total > 0 else 1.0
    return FitReport(
        mode=mode, slope=float(slope), intercept=float(intercept),
        r_squared=r_squared, n_points=int(ks.size),
    )


#: canonical trace column order; the Lyapunov column is renamed
#: ``V_surrogate`` when the optimum it subtracts is the in-run best value
TRACE_COLUMNS = (
    "k",
    "What",
    "What_avg",
    "consensus",
    "stationarity",
    "objective",
    "V",
    "descent_residual",
    "w_norm_sq",
    "e_norm_sq",
)


@dataclass
class Trace:
    """Per-iteration metric rows plus run metadata.

    Row ``k`` describes the state entering iteration ``k``; its noise norms
    are those of the perturbations sampled at ``k`` (applied in the step to
    ``k+1``; NaN on the final row), and its descent residual is
    ``V^k - V^{k-1} - D1*||w^{k-1}||^2 - D2*||e^{k-1}||^2`` (NaN at ``k=0``
    or when the dense certificate was not evaluated).
    """

    columns: dict[str, np.ndarray]
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("trace columns have inconsistent lengths")
        for name in self.columns:
            if name not in TRACE_COLUMNS:
                raise ValueError(f"unknown trace column {name!r}")
        bad = [
            name
            for name in self.columns
            if name not in ("V", "descent_residual", "w_norm_sq", "e_norm_sq")
            and not np.all(np.isfinite(self.columns[name]))
        ]
        if bad:
            raise ValueError(f"non-finite values in trace columns {bad}")

    def __len__(self) -> int:
        return len(self.columns["k"])

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    @property
    def surrogate_optimum(self) -> bool:
        return self.meta.get("f_star_kind") == "surrogate"

    def write_csv(self, path) -> None:
        """Serialize with a ``#`` metadata header block, then fixed columns.

        Floats are written with shortest-roundtrip ``repr``, so identical
        runs produce byte-identical files.
        """
        names = [
            "V_surrogate" if name == "V" and self.surrogate_optimum else name
            for name in TRACE_COLUMNS
        ]
        with open(path, "w", encoding="ascii", newline="\n") as handle:
            for key in sorted(self.meta):
                handle.write(f"# {key}: {self.meta[key]}\n")
            handle.write(",".join(names) + "\n")
            n_rows = len(self)
            for row in range(n_rows):
                cells = []
                for name in TRACE_COLUMNS:
                    value = self.columns[name][row]
                    if name == "k":
                        cells.append(str(int(value)))
                    else:
                        cells.append(repr(float(value)))
                handle.write(",".join(cells) + "\n")

    @classmethod
    def read_csv(cls, path) -> "Trace":
        meta: dict[str, str] = {}
        rows: list[list[float]] = []
        header: list[str] | None = None
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
                    header = [
                        "V" if cell == "V_surrogate" else cell
                        for cell in line.split(",")
                    ]
                    continue
                rows.append([float(cell) for cell in line.split(",")])
        if header is None:
            raise ValueError(f"{path}: no header row")
        data = np.array(rows, dtype=float).reshape(len(rows), len(header))
        return cls(columns={name: data[:, i] for i, name in enumerate(header)}, meta=meta)
