import numpy as np
import pytest

import dpp2
from conftest import dense_hessian, finite_difference_gradient


def _check_gradients_fd(problem, probes=50, seed=0, rtol=1e-4):
    rng = np.random.default_rng(seed)
    for _ in range(probes // problem.n_nodes + 1):
        x = rng.standard_normal(problem.dimension)
        for i in range(problem.n_nodes):
            def value_i(p, node=i):
                stack = np.zeros((problem.n_nodes, problem.dimension))
                stack[node] = p
                return float(problem.value(stack)[node])
            fd = finite_difference_gradient(value_i, x)
            stack = np.broadcast_to(x, (problem.n_nodes, problem.dimension))
            got = problem.gradient(stack)[i]
            np.testing.assert_allclose(got, fd, rtol=rtol, atol=1e-8)


class TestGenerateDataset:
    def test_labels_are_signs(self):
        ds = dpp2.generate_dataset(1, 3, 1, seed=0)
        assert ds.labels.shape == (1, 1)
        assert ds.labels[0, 0] in (-1.0, 1.0)

    def test_deterministic(self):
        a = dpp2.generate_dataset(4, 3, 7, seed=5)
        b = dpp2.generate_dataset(4, 3, 7, seed=5)
        np.testing.assert_array_equal(a.labels, b.labels)
        np.testing.assert_array_equal(a.features, b.features)

    def test_benchmark_scale(self):
        ds = dpp2.generate_dataset(50, 10, 200, seed=1)
        assert ds.features.shape == (50, 200, 10)
        assert set(np.unique(ds.labels)) <= {-1.0, 1.0}

    def test_round_trip(self, tmp_path):
        ds = dpp2.generate_dataset(3, 2, 4, seed=9)
        path = tmp_path / "data.txt"
        dpp2.save_dataset(path, ds)
        loaded = dpp2.load_dataset(path)
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        np.testing.assert_array_equal(loaded.features, ds.features)


class TestLogistic:
    def test_value_at_origin(self):
        ds = dpp2.generate_dataset(4, 3, 10, seed=2)
        prob = dpp2.logistic_nonconvex(ds, lam=0.01, omega=2.0)
        values = prob.value(np.zeros((4, 3)))
        np.testing.assert_allclose(values, np.log(2.0), rtol=1e-14)

    def test_gradient_at_origin_closed_form(self):
        ds = dpp2.generate_dataset(3, 4, 8, seed=3)
        prob = dpp2.logistic_nonconvex(ds, lam=0.01, omega=1.0)
        got = prob.gradient(np.zeros((3, 4)))
        expected = -(ds.labels[:, :, None] * ds.features).sum(axis=1) / (2 * 8)
        np.testing.assert_allclose(got, expected, rtol=1e-12)

    def test_gradient_matches_finite_differences(self):
        ds = dpp2.generate_dataset(3, 3, 12, seed=4)
        prob = dpp2.logistic_nonconvex(ds, lam=0.005, omega=1.5)
        _check_gradients_fd(prob)

    def test_smoothness_bound_on_probe_pairs(self):
        ds = dpp2.generate_dataset(5, 4, 20, seed=6)
        prob = dpp2.logistic_nonconvex(ds)
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.standard_normal((5, 4)) * rng.uniform(0.1, 3)
            y = rng.standard_normal((5, 4)) * rng.uniform(0.1, 3)
            lhs = np.linalg.norm(prob.gradient(x) - prob.gradient(y), axis=1)
            rhs = prob.smoothness * np.linalg.norm(x - y, axis=1)
            assert (lhs <= rhs * (1 + 1e-8)).all()

    def test_benchmark_smoothness_magnitude(self):
        # the bound (1/(4m)) sum ||z||^2 + 2*lam*omega concentrates near d/4
        # for standard Gaussian features; check the order of magnitude only
        ds = dpp2.generate_dataset(50, 10, 200, seed=1)
        prob = dpp2.logistic_nonconvex(ds, lam=0.001, omega=1.0)
        assert 0.5 <= prob.smoothness_max <= 50.0

    def test_stable_for_huge_margins(self):
        ds = dpp2.generate_dataset(2, 3, 5, seed=8)
        prob = dpp2.logistic_nonconvex(ds)
        x = np.full((2, 3), 500.0)
        assert np.isfinite(prob.value(x)).all()
        assert np.isfinite(prob.gradient(x)).all()

    def test_empty_rejected(self):
        ds = dpp2.generate_dataset(2, 2, 1, seed=0)
        with pytest.raises(ValueError):
            dpp2.logistic_nonconvex(ds, lam=-0.1)


class TestQuadratic:
    def test_scalar_instance(self):
        prob = dpp2.quadratic_from_data(np.array([[[1.0]]]), np.array([[0.0]]))
        assert prob.value(np.array([[3.0]]))[0] == pytest.approx(4.5)
        assert prob.pl_constant == pytest.approx(1.0)
        assert prob.f_star == pytest.approx(0.0, abs=1e-15)

    def test_pl_constant_matches_hessian_eigensolve(self):
        prob = dpp2.quadratic_pl(2, 2, rank_deficit=0, seed=7)
        x0 = np.zeros(2)
        hessian = dense_hessian(lambda p: prob.gradient_at(p).sum(axis=0), 2, x0)
        eigenvalues = np.linalg.eigvalsh(hessian)
        assert prob.pl_constant == pytest.approx(eigenvalues[0], rel=1e-6)

    def test_rank_deficit_spectrum_and_pl_probe(self):
        prob = dpp2.quadratic_pl(4, 5, rank_deficit=1, seed=11)
        hessian = dense_hessian(lambda p: prob.gradient_at(p).sum(axis=0), 5, np.zeros(5))
        eigenvalues = np.linalg.eigvalsh(hessian)
        assert np.sum(np.abs(eigenvalues) < 1e-8) == 1  # exactly one zero eigenvalue
        rng = np.random.default_rng(0)
        nu = prob.pl_constant
        for _ in range(100):
            x = rng.standard_normal(5) * rng.uniform(0.1, 5)
            grad_sum = prob.gradient_at(x).sum(axis=0)
            f_gap = prob.value_at(x) - prob.f_star
            assert (grad_sum**2).sum() >= 2 * nu * f_gap * (1 - 1e-8)

    def test_pl_probe_full_rank(self):
        prob = dpp2.quadratic_pl(3, 4, rank_deficit=0, seed=13)
        rng = np.random.default_rng(1)
        for _ in range(100):
            x = rng.standard_normal(4) * rng.uniform(0.1, 5)
            grad_sum = prob.gradient_at(x).sum(axis=0)
            f_gap = prob.value_at(x) - prob.f_star
            assert (grad_sum**2).sum() >= 2 * prob.pl_constant * f_gap * (1 - 1e-8)

    def test_gradient_matches_finite_differences(self):
        prob = dpp2.quadratic_pl(3, 3, rank_deficit=1, seed=2)
        _check_gradients_fd(prob)

    def test_shared_minimizer_variant(self):
        prob = dpp2.quadratic_pl(4, 3, seed=3, heterogeneous=False)
        # gradients vanish node-wise at the common least-squares solution
        assert prob.f_star == pytest.approx(0.0, abs=1e-20)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            dpp2.quadratic_pl(2, 3, rank_deficit=3, seed=0)


def test_problem_value_at_sums_nodes():
    prob = dpp2.quadratic_pl(4, 2, seed=1)
    x = np.array([0.3, -1.2])
    stack = np.broadcast_to(x, (4, 2))
    assert prob.value_at(x) == pytest.approx(float(prob.value(stack).sum()), rel=1e-14)
