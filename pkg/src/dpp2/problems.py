"""Local objective oracles with gradients and smoothness constants.

A :class:`Problem` bundles N per-node objectives f_i : R^d -> R. The two
built-in families are the nonconvex binary-classification benchmark
(logistic loss plus a smooth bounded nonconvex regularizer) and a quadratic
family engineered to satisfy the Polyak-Lojasiewicz inequality with a known
constant, used to exercise linear-rate behavior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "Problem",
    "Dataset",
    "generate_dataset",
    "logistic_nonconvex",
    "quadratic_pl",
    "quadratic_from_data",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True)
class Dataset:
    """Labeled features split across nodes.

    labels : ndarray, shape (N, m), entries in {-1, +1}
    features : ndarray, shape (N, m, d)
    """

    labels: np.ndarray = field(repr=False)
    features: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.labels.ndim != 2 or self.features.ndim != 3:
            raise ValueError("labels must be (N, m) and features (N, m, d)")
        if self.labels.shape != self.features.shape[:2]:
            raise ValueError("labels and features disagree on (N, m)")
        if not np.all(np.abs(self.labels) == 1):
            raise ValueError("labels must be exactly +-1")

    @property
    def n_nodes(self) -> int:
        return self.labels.shape[0]

    @property
    def samples_per_node(self) -> int:
        return self.labels.shape[1]

    @property
    def dimension(self) -> int:
        return self.features.shape[2]


def generate_dataset(
    n_nodes: int,
    dimension: int,
    samples_per_node: int,
    seed: int,
    label_noise: float = 1.0,
) -> Dataset:
    """Draw a synthetic classification dataset, deterministic given ``seed``.

    Features are i.i.d. standard Gaussian. Labels come from a planted linear
    model: ``y = sign(z . w* + label_noise * g)`` with a seeded ground truth
    ``w*`` and Gaussian ``g``, so the optimization landscape is nontrivial
    rather than pure coin flips.
    """
    if min(n_nodes, dimension, samples_per_node) < 1:
        raise ValueError("all dataset sizes must be positive")
    rng = np.random.default_rng(seed)
    w_star = rng.standard_normal(dimension)
    features = rng.standard_normal((n_nodes, samples_per_node, dimension))
    margins = features @ w_star + label_noise * rng.standard_normal(
        (n_nodes, samples_per_node)
    )
    labels = np.where(margins >= 0.0, 1.0, -1.0)
    return Dataset(labels=labels, features=features)


@dataclass(frozen=True)
class Problem:
    """N local objectives with batched value/gradient evaluation.

    ``value(X)`` and ``gradient(X)`` take a per-node stack X of shape (N, d)
    and return per-node values (N,) and gradients (N, d); all oracles are
    pure functions of (X, immutable data).

    Attributes
    ----------
    smoothness : ndarray, shape (N,)
        Per-node Lipschitz constants M_i of the gradients.
    smoothness_max : float
        max_i M_i.
    pl_constant : float or None
        When set, the global objective satisfies
        ``||sum_i grad f_i(x)||^2 >= 2 * pl_constant * (sum_i f_i(x) - f_star)``.
    f_star : float or None
        Known infimum of the global objective, when available.
    """

    n_nodes: int
    dimension: int
    _value: callable = field(repr=False)
    _gradient: callable = field(repr=False)
    smoothness: np.ndarray = field(repr=False)
    smoothness_max: float
    kind: str
    pl_constant: float | None = None
    f_star: float | None = None

    def value(self, x_stack: np.ndarray) -> np.ndarray:
        """Per-node objective values at the per-node points ``x_stack`` (N, d)."""
        return self._value(np.asarray(x_stack, dtype=float))

    def gradient(self, x_stack: np.ndarray) -> np.ndarray:
        """Per-node gradients at the per-node points ``x_stack`` (N, d)."""
        return self._gradient(np.asarray(x_stack, dtype=float))

    def value_at(self, x: np.ndarray) -> float:
        """Global objective sum_i f_i(x) at a single point x (d,)."""
        tiled = np.broadcast_to(np.asarray(x, dtype=float), (self.n_nodes, self.dimension))
        return float(self.value(tiled).sum())

    def gradient_at(self, x: np.ndarray) -> np.ndarray:
        """Stacked per-node gradients, all evaluated at the same point x (d,)."""
        tiled = np.broadcast_to(np.asarray(x, dtype=float), (self.n_nodes, self.dimension))
        return self.gradient(tiled)


def _regularizer_value(x_stack: np.ndarray, lam: float, omega: float) -> np.ndarray:
    sq = omega * x_stack**2
    return lam * (sq / (1.0 + sq)).sum(axis=-1)


def _regularizer_gradient(x_stack: np.ndarray, lam: float, omega: float) -> np.ndarray:
    return 2.0 * lam * omega * x_stack / (1.0 + omega * x_stack**2) ** 2


def logistic_nonconvex(dataset: Dataset, lam: float = 0.001, omega: float = 1.0) -> Problem:
    """Binary classification with a smooth bounded nonconvex regularizer.

    .. math::
        f_i(x) = \\frac{1}{m}\\sum_{s=1}^m \\log(1 + e^{-y_{is} x^T z_{is}})
                 + \\sum_{t=1}^d \\frac{\\lambda\\omega [x]_t^2}{1 + \\omega [x]_t^2}

    The loss is evaluated through ``logaddexp`` and the gradient in closed
    form through the logistic sigmoid, so both are stable for large margins.
    Per-node smoothness is the analytic bound
    ``M_i = (1/(4m)) sum_s ||z_is||^2 + 2*lam*omega``: the logistic Hessian
    curvature is at most 1/4 per sample and the regularizer's second
    derivative ``lam*omega*(2 - 6*omega*t^2)/(1 + omega*t^2)^3`` has
    magnitude at most ``2*lam*omega``.
    """
    if lam < 0 or omega <= 0:
        raise ValueError("need lam >= 0 and omega > 0")
    if dataset.samples_per_node < 1:
        raise ValueError("dataset must hold at least one sample per node")
    labels = dataset.labels
    features = dataset.features
    m = dataset.samples_per_node
    yz = labels[:, :, None] * features  # (N, m, d)

    def value(x_stack):
        margins = np.einsum("nmd,nd->nm", yz, x_stack)
        loss = np.logaddexp(0.0, -margins).mean(axis=1)
        return loss + _regularizer_value(x_stack, lam, omega)

    def gradient(x_stack):
        margins = np.einsum("nmd,nd->nm", yz, x_stack)
        weights = expit(-margins)  # sigma(-y x.z)
        loss_grad = -np.einsum("nm,nmd->nd", weights, yz) / m
        return loss_grad + _regularizer_gradient(x_stack, lam, omega)

    smoothness = (features**2).sum(axis=2).sum(axis=1) / (4.0 * m) + 2.0 * lam * omega
    return Problem(
        n_nodes=dataset.n_nodes,
        dimension=dataset.dimension,
        _value=value,
        _gradient=gradient,
        smoothness=smoothness,
        smoothness_max=float(smoothness.max()),
        kind="logistic_nonconvex",
    )


def quadratic_from_data(matrices: np.ndarray, offsets: np.ndarray) -> Problem:
    """Least-squares problem ``f_i(x) = 0.5 * ||A_i x - b_i||^2``.

    ``matrices`` has shape (N, p, d) and ``offsets`` (N, p). The global
    objective is quadratic with Hessian ``H = sum_i A_i^T A_i``; it satisfies
    the gradient-dominance inequality with constant equal to the smallest
    nonzero eigenvalue of H, which is recorded as ``pl_constant``. ``f_star``
    is computed by a least-squares pseudo-solve of the stacked system.
    """
    matrices = np.asarray(matrices, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    if matrices.ndim != 3 or offsets.shape != matrices.shape[:2]:
        raise ValueError("matrices must be (N, p, d) with offsets (N, p)")
    n_nodes, _, dimension = matrices.shape

    def value(x_stack):
        residual = np.einsum("npd,nd->np", matrices, x_stack) - offsets
        return 0.5 * (residual**2).sum(axis=1)

    def gradient(x_stack):
        residual = np.einsum("npd,nd->np", matrices, x_stack) - offsets
        return np.einsum("npd,np->nd", matrices, residual)

    gram = np.einsum("npd,npe->nde", matrices, matrices)
    smoothness = np.array([np.linalg.eigvalsh(g)[-1] for g in gram])
    hessian = gram.sum(axis=0)
    eigenvalues = np.linalg.eigvalsh(hessian)
    positive = eigenvalues[eigenvalues > 1e-10 * max(eigenvalues[-1], 1.0)]
    nu = float(positive[0]) if positive.size else 0.0

    stacked_A = matrices.reshape(-1, dimension)
    stacked_b = offsets.reshape(-1)
    solution, *_ = np.linalg.lstsq(stacked_A, stacked_b, rcond=None)
    f_star = 0.5 * float(((stacked_A @ solution - stacked_b) ** 2).sum())

    return Problem(
        n_nodes=n_nodes,
        dimension=dimension,
        _value=value,
        _gradient=gradient,
        smoothness=smoothness,
        smoothness_max=float(smoothness.max()),
        kind="quadratic_pl",
        pl_constant=nu,
        f_star=f_star,
    )


def quadratic_pl(
    n_nodes: int,
    dimension: int,
    rank_deficit: int = 0,
    seed: int = 0,
    heterogeneous: bool = True,
) -> Problem:
    """Seeded random quadratic instance satisfying gradient dominance.

    Each node holds ``f_i(x) = 0.5 * ||A_i x - b_i||^2`` with Gaussian
    ``A_i`` and ``b_i`` in the range of ``A_i``. With ``rank_deficit > 0``,
    a shared set of directions is projected out of every ``A_i``, so the
    global Hessian is singular while the gradient-dominance constant stays
    positive (the smallest nonzero Hessian eigenvalue).

    ``heterogeneous=False`` plants a single shared minimizer (every node's
    residual vanishes at the same point), which makes the local gradients
    all zero at the optimum.
    """
    if not 0 <= rank_deficit < dimension:
        raise ValueError("need 0 <= rank_deficit < dimension")
    rng = np.random.default_rng(seed)
    matrices = rng.standard_normal((n_nodes, dimension, dimension)) / np.sqrt(dimension)
    if rank_deficit > 0:
        gaussian = rng.standard_normal((dimension, rank_deficit))
        null_basis, _ = np.linalg.qr(gaussian)
        projector = np.eye(dimension) - null_basis @ null_basis.T
        matrices = matrices @ projector
    if heterogeneous:
        targets = rng.standard_normal((n_nodes, dimension))
    else:
        targets = np.broadcast_to(rng.standard_normal(dimension), (n_nodes, dimension))
    offsets = np.einsum("npd,nd->np", matrices, targets)
    return quadratic_from_data(matrices, offsets)


def save_dataset(path, dataset: Dataset) -> None:
    """Write a dataset as columnar text: header ``N d m``, then one line
    ``node label z_1 ... z_d`` per sample."""
    with open(path, "w", encoding="ascii") as handle:
        handle.write(f"{dataset.n_nodes} {dataset.dimension} {dataset.samples_per_node}\n")
        for i in range(dataset.n_nodes):
            for s in range(dataset.samples_per_node):
                coords = " ".join(repr(float(z)) for z in dataset.features[i, s])
                handle.write(f"{i + 1} {int(dataset.labels[i, s])} {coords}\n")


def load_dataset(path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`."""
    with open(path, encoding="ascii") as handle:
        header = handle.readline().split()
        n_nodes, dimension, samples = (int(t) for t in header)
        labels = np.zeros((n_nodes, samples))
        features = np.zeros((n_nodes, samples, dimension))
        counters = [0] * n_nodes
        for line in handle:
            tokens = line.split()
            if not tokens:
                continue
            node = int(tokens[0]) - 1
            s = counters[node]
            counters[node] += 1
            labels[node, s] = float(tokens[1])
            features[node, s] = [float(t) for t in tokens[2 : 2 + dimension]]
    if counters != [samples] * n_nodes:
        raise ValueError(f"{path}: expected {samples} samples for every node")
    return Dataset(labels=labels, features=features)
