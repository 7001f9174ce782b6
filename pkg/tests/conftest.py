"""Shared instances for the test suite.

The desk-scale classification instance (10-node geometric network) and the
small quadratic instances are frozen here so module tests and the
acceptance suite exercise identical objects.
"""

import numpy as np
import pytest

import dpp2
from dpp2.theory import AlgoParams, EtaSchedule


DESK_GRAPH_SEED = 3
DESK_DATA_SEED = 11


@pytest.fixture(scope="session")
def desk_network():
    edges = dpp2.random_geometric_graph(10, 0.5, seed=DESK_GRAPH_SEED)
    return dpp2.build_laplacian(edges, 10)


@pytest.fixture(scope="session")
def desk_problem():
    dataset = dpp2.generate_dataset(10, 5, 50, seed=DESK_DATA_SEED)
    return dpp2.logistic_nonconvex(dataset)


def desk_params(network, horizon, eta=None):
    alpha = 0.7
    return AlgoParams(
        alpha=alpha,
        beta=0.1 * alpha / network.lambda_max,
        rho=0.2,
        eta=eta or EtaSchedule.constant(0.5),
        horizon=horizon,
    )


@pytest.fixture(scope="session")
def quad5():
    network = dpp2.build_laplacian(dpp2.path_edges(5), 5)
    problem = dpp2.quadratic_pl(5, 3, rank_deficit=0, seed=42)
    return network, problem


def finite_difference_gradient(value_at, x, h=1e-6):
    """Central finite differences of a scalar function at x."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.size):
        shift = np.zeros_like(x)
        shift[j] = h
        grad[j] = (value_at(x + shift) - value_at(x - shift)) / (2 * h)
    return grad


def dense_hessian(gradient_at, dim, x, h=1e-5):
    """Symmetrized finite-difference Hessian of a gradient field at x."""
    hessian = np.zeros((dim, dim))
    for j in range(dim):
        shift = np.zeros(dim)
        shift[j] = h
        hessian[:, j] = (gradient_at(x + shift) - gradient_at(x - shift)) / (2 * h)
    return 0.5 * (hessian + hessian.T)
