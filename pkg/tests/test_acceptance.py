"""Acceptance gate: the exit criteria, each at its stated tolerance.

Each test prints one `[acceptance] <criterion>: PASS|FAIL` line. The noisy
half of the Lyapunov descent criterion is expected to fail: the descent
certificate is structurally not monotone once decaying noise has excited
the dual variable (see the pure-dual-state counterexample in
tests/test_diagnostics.py and the analysis in the project notes); the
criterion is implemented faithfully and left red rather than weakened.
"""

import filecmp
import time

import numpy as np
import pytest

import dpp2
from conftest import DESK_DATA_SEED, DESK_GRAPH_SEED, desk_params, finite_difference_gradient
from dpp2.algorithm import TraceConfig, initial_state, run, step, step_equivalent
from dpp2.config import config_from_dict
from dpp2.diagnostics import DenseAnalysis, optimality_gap, rate_fit
from dpp2.experiment import run_experiment, run_sweep
from dpp2.privacy import NoiseSchedule, NoiseStreams, dp_budget, dp_budget_terms
from dpp2.theory import AlgoParams, EtaSchedule, search_feasible_parameters


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f"  [{detail}]" if detail else ""
    print(f"\n[acceptance] {name}: {status}{suffix}")


def _desk_instance():
    edges = dpp2.random_geometric_graph(10, 0.5, seed=DESK_GRAPH_SEED)
    network = dpp2.build_laplacian(edges, 10)
    dataset = dpp2.generate_dataset(10, 5, 50, seed=DESK_DATA_SEED)
    return network, dpp2.logistic_nonconvex(dataset)


def test_criterion_01_form_equivalence():
    """Algorithm trajectory vs the eta-free recursion: <= 1e-8 per iteration."""
    network, problem = _desk_instance()
    params = desk_params(network, 500, eta=EtaSchedule.random(seed=99))
    schedule = NoiseSchedule.homogeneous(10, 1.0, 0.9)
    start = time.perf_counter()
    streams = NoiseStreams(schedule, np.random.SeedSequence(21), 5)
    state = initial_state(network, 5)
    xs, noises = [state.x], []
    for _ in range(500):
        state = step(state, params, network, problem, streams)
        xs.append(state.x)
        noises.append((state.w, state.e))
    x = np.zeros((10, 5))
    q = np.zeros((10, 5))
    worst = 0.0
    for k in range(500):
        w, e = noises[k]
        x, q = step_equivalent(x, q, w, e, params, network, problem)
        scale = max(1.0, float(np.linalg.norm(xs[k + 1])))
        worst = max(worst, float(np.linalg.norm(x - xs[k + 1])) / scale)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 5.0
    _report("criterion 1 (form equivalence, K=500)", ok,
            f"max rel err {worst:.2e}, {elapsed:.1f}s")
    assert worst <= 1e-8
    assert elapsed < 5.0


def test_criterion_02_eta_invariance():
    """Constant vs seeded-random eta with shared noise: <= 1e-8 over K=500."""
    network, problem = _desk_instance()
    schedule = NoiseSchedule.homogeneous(10, 1.0, 0.9)
    trajectories = []
    for eta in (EtaSchedule.constant(0.5), EtaSchedule.random(seed=123)):
        params = desk_params(network, 500, eta=eta)
        streams = NoiseStreams(schedule, np.random.SeedSequence(77), 5)
        state = initial_state(network, 5)
        xs = []
        for _ in range(500):
            state = step(state, params, network, problem, streams)
            xs.append(state.x.copy())
        trajectories.append(xs)
    worst = 0.0
    for a, b in zip(*trajectories):
        scale = max(1.0, float(np.linalg.norm(a)))
        worst = max(worst, float(np.linalg.norm(a - b)) / scale)
    ok = worst <= 1e-8
    _report("criterion 2 (eta invariance, K=500)", ok, f"max rel err {worst:.2e}")
    assert worst <= 1e-8


def _certified_5node():
    network = dpp2.build_laplacian(dpp2.path_edges(5), 5)
    problem = dpp2.quadratic_pl(5, 3, rank_deficit=0, seed=42)
    params, constants = search_feasible_parameters(
        network, problem.smoothness_max, nu=problem.pl_constant, r_bar=0.9
    )
    assert constants.certified
    return network, problem, params, constants


def test_criterion_03_descent_zero_noise():
    """Certified parameters, zero noise: V nonincreasing for k <= 1000."""
    network, problem, params, constants = _certified_5node()
    params.horizon = 1000
    trace = run(problem, network, params, NoiseSchedule.zero(5), seed=1,
                trace_config=TraceConfig(cadence=1, dense=True, constants=constants))
    v = trace.column("V")
    dv = np.diff(v)
    worst = float(dv.max())
    ok = worst <= 1e-10
    _report("criterion 3a (certified zero-noise descent, k<=1000)", ok,
            f"max V increase {worst:.2e}")
    assert worst <= 1e-10


def test_criterion_03_descent_noisy_bound():
    """Noisy descent bound V' - V <= D1||w||^2 + D2||e||^2 + 1e-10.

    Expected red: once the decaying noise has pushed the dual variable off
    zero, the certificate oscillates and its increases outlive the noise
    terms that are supposed to dominate them. Kept faithful to the stated
    criterion rather than masked with a fatter schedule.
    """
    network, problem, params, constants = _certified_5node()
    params.horizon = 1000
    trace = run(problem, network, params, NoiseSchedule.homogeneous(5, 1.0, 0.9),
                seed=2, trace_config=TraceConfig(cadence=1, dense=True, constants=constants))
    residual = trace.column("descent_residual")[1:]
    worst = float(np.nanmax(residual))
    violations = int((residual > 1e-10).sum())
    ok = worst <= 1e-10
    _report("criterion 3b (certified noisy descent bound, k<=1000)", ok,
            f"max residual {worst:.2e}, {violations}/1000 violations")
    assert worst <= 1e-10


def test_criterion_04_sublinear_rate():
    """Zero-noise desk benchmark: running-average slope and final gap."""
    network, problem = _desk_instance()
    params = desk_params(network, 5000)
    start = time.perf_counter()
    trace = run(problem, network, params, NoiseSchedule.zero(10), seed=1)
    elapsed = time.perf_counter() - start
    ks = trace.column("k")
    window = ks >= 100
    fit = rate_fit(ks[window], trace.column("What_avg")[window], mode="sublinear")
    final_gap = float(trace.column("What")[-1])
    ok = -1.4 <= fit.slope <= -0.8 and final_gap <= 1e-6 and elapsed < 30.0
    _report("criterion 4 (sublinear rate, K=5000)", ok,
            f"slope {fit.slope:.3f}, final gap {final_gap:.2e}, {elapsed:.1f}s")
    assert -1.4 <= fit.slope <= -0.8
    assert final_gap <= 1e-6
    assert elapsed < 30.0


def test_criterion_05_linear_rate():
    """Gradient-dominated quadratic: affine log decay to <= 1e-10."""
    network = dpp2.build_laplacian(dpp2.cycle_edges(8), 8)
    problem = dpp2.quadratic_pl(8, 4, rank_deficit=0, seed=5)
    params = AlgoParams(alpha=0.2, beta=0.02 / network.lambda_max, rho=0.6,
                        eta=EtaSchedule.constant(0.5), horizon=4000)
    trace = run(problem, network, params, NoiseSchedule.zero(8), seed=1)
    metric = np.maximum(
        trace.column("consensus") + trace.column("objective") - problem.f_star, 0.0
    )
    fit = rate_fit(trace.column("k"), metric, mode="linear", floor=1e-11)
    final = float(metric[-1])
    ok = fit.r_squared >= 0.99 and fit.slope < 0 and final <= 1e-10
    _report("criterion 5 (linear rate on PL instance)", ok,
            f"R^2 {fit.r_squared:.4f}, slope {fit.slope:.4f}, final {final:.2e}")
    assert fit.r_squared >= 0.99
    assert fit.slope < 0
    assert final <= 1e-10


def test_criterion_06_noise_energy_bound():
    """Mean weighted noise energy over 100 seeds stays under the summability bound."""
    network = dpp2.build_laplacian(dpp2.cycle_edges(10), 10)
    problem = dpp2.quadratic_pl(10, 1, rank_deficit=0, seed=9)
    params, constants = search_feasible_parameters(
        network, problem.smoothness_max, nu=problem.pl_constant, r_bar=0.9
    )
    params.horizon = 80
    schedule = NoiseSchedule(
        u_e=np.ones(10), u_w=np.ones(10), r=np.linspace(0.5, 0.9, 10)
    )
    assert schedule.u_bar == 1.0 and schedule.r_bar == 0.9
    bound = (constants.d1 + constants.d2) * 2 * 10 * schedule.u_bar**2 / (1 - schedule.r_bar**2)
    totals = []
    for seed in range(100):
        trace = run(problem, network, params, schedule, seed=seed,
                    trace_config=TraceConfig(cadence=80))
        w_sq = trace.column("w_norm_sq")[:-1]
        e_sq = trace.column("e_norm_sq")[:-1]
        totals.append(constants.d1 * w_sq.sum() + constants.d2 * e_sq.sum())
    mean_total = float(np.mean(totals))
    ok = mean_total <= bound
    _report("criterion 6 (noise summability bound, 100 seeds)", ok,
            f"mean {mean_total:.3e} <= bound {bound:.3e} (ratio {mean_total / bound:.2f})")
    assert mean_total <= bound


def test_criterion_07_privacy_consistency():
    """Worked budget value, term-by-term agreement, selection round trips."""
    worked = dp_budget(horizon=1, dimension=1, alpha=0.1, delta=1.0,
                       m_bar=5.0, u_e=1.0, u_w=1.0, r=0.5).epsilon
    worked_ok = abs(worked - 4.4) <= 4.4 * 1e-12

    rng = np.random.default_rng(42)
    terms_ok = True
    for _ in range(50):
        m_bar = rng.uniform(0.5, 8)
        args = dict(
            horizon=int(rng.integers(1, 100)), dimension=int(rng.integers(1, 20)),
            alpha=rng.uniform(0.01, 0.9) / m_bar, delta=rng.uniform(0.05, 4),
            m_bar=m_bar, u_e=rng.uniform(0.1, 5), u_w=rng.uniform(0.1, 5),
            r=rng.uniform(0.05, 0.99),
        )
        closed = dp_budget(**args).epsilon
        summed = float(dp_budget_terms(**args).sum())
        if abs(closed - summed) > 1e-12 * summed:
            terms_ok = False

    feasible_seen = 0
    round_trip_ok = True
    for attempt in range(600):
        m_bar = rng.uniform(0.5, 4)
        if attempt % 2 == 0:
            delta = 10 ** rng.uniform(-4.0, -2.6) * m_bar
            horizon = int(rng.integers(2, 40))
        else:
            delta = rng.uniform(0.2, 0.5) * m_bar
            horizon = int(rng.integers(2, 4))
        report = dpp2.select_dp_parameters(
            epsilon_target=rng.uniform(5, 100), delta=delta,
            dimension=int(rng.integers(1, 6)), m_bar=m_bar,
            horizon=horizon, u_w=rng.uniform(0.5, 4),
        )
        if not report.feasible:
            continue
        feasible_seen += 1
        lo, hi = report.r_interval
        for frac in (0.01, 0.25, 0.5, 0.75, 0.99):
            r = lo + (hi - lo) * frac
            if not lo < r < 1.0:
                continue
            epsilon = dp_budget(
                horizon=report.horizon, dimension=report.dimension,
                alpha=report.alpha_selected, delta=report.delta,
                m_bar=report.m_bar, u_e=report.u_e, u_w=report.u_w, r=r,
            ).epsilon
            if epsilon > report.epsilon_target * (1 + 1e-9):
                round_trip_ok = False
        if feasible_seen >= 50:
            break
    ok = worked_ok and terms_ok and round_trip_ok and feasible_seen >= 50
    _report("criterion 7 (privacy accounting consistency)", ok,
            f"worked={worked!r}, feasible selections={feasible_seen}")
    assert worked_ok
    assert terms_ok
    assert feasible_seen >= 50
    assert round_trip_ok


def _trend_config(tmp_path, label):
    return config_from_dict({
        "seed": 1000,
        "output_dir": str(tmp_path / label),
        "repeats": 10,
        "label": label,
        "problem": {"kind": "logistic", "n_nodes": 10, "dimension": 5,
                    "samples_per_node": 50, "data_seed": DESK_DATA_SEED},
        "network": {"kind": "geometric", "radius": 0.5, "graph_seed": DESK_GRAPH_SEED},
        "params": {"alpha": 0.7, "beta": "auto", "rho": 0.2, "horizon": 2000},
        "noise": {"u_e": 1.0, "u_w": 1.0, "decay": 0.9},
        "trace": {"cadence": 100},
    })


def test_criterion_08_decay_trend(tmp_path):
    """Mean final gap non-decreasing in the noise decay rate."""
    base = _trend_config(tmp_path, "decay_trend")
    start = time.perf_counter()
    sweep = run_sweep(base, "decay", [0.0, 0.5, 0.9, 0.95])
    elapsed = time.perf_counter() - start
    means = [r.final_gap_mean for r in sweep.results]
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    ok = monotone and elapsed < 300.0
    _report("criterion 8a (trend in decay rate)", ok,
            "means " + ", ".join(f"{m:.3e}" for m in means) + f"; {elapsed:.0f}s")
    assert monotone, means
    assert elapsed < 300.0


def test_criterion_08_magnitude_trend(tmp_path):
    """Mean final gap non-decreasing in the noise magnitude."""
    base = _trend_config(tmp_path, "magnitude_trend")
    base.noise.decay = 0.95
    start = time.perf_counter()
    sweep = run_sweep(base, "magnitude", [0.0, 0.1, 1.0, 5.0])
    elapsed = time.perf_counter() - start
    means = [r.final_gap_mean for r in sweep.results]
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    ok = monotone and elapsed < 300.0
    _report("criterion 8b (trend in noise magnitude)", ok,
            "means " + ", ".join(f"{m:.3e}" for m in means) + f"; {elapsed:.0f}s")
    assert monotone, means
    assert elapsed < 300.0


def test_criterion_09_structural_invariants():
    """Null space, dual identities, gradient checks, noise moments."""
    checks = {}

    # weight-matrix structure over assorted topologies
    nets = [
        dpp2.build_laplacian(dpp2.path_edges(6), 6),
        dpp2.build_laplacian(dpp2.cycle_edges(7), 7),
        dpp2.build_laplacian(dpp2.random_geometric_graph(12, 0.5, seed=2), 12),
    ]
    checks["laplacian"] = all(
        np.abs(net.P @ np.ones(net.n)).max() <= 1e-12
        and net.eigenvalues[0] >= -1e-10
        and net.lambda_min_pos > 1e-10
        for net in nets
    )

    # dual identities along a noisy run
    network, problem = _desk_instance()
    params = desk_params(network, 200, eta=EtaSchedule.random(seed=7))
    streams = NoiseStreams(NoiseSchedule.homogeneous(10, 1.0, 0.9),
                           np.random.SeedSequence(3), 5)
    state = initial_state(network, 5)
    dual_ok = True
    for k in range(200):
        state = step(state, params, network, problem, streams)
        expected = params.rho * network.mix(state.d)
        scale = max(1.0, float(np.linalg.norm(expected)))
        if np.linalg.norm(state.q - expected) / scale > 1e-9:
            dual_ok = False
        if np.abs(state.q.sum(axis=0)).max() > 1e-9 * max(k, 1):
            dual_ok = False
    checks["dual_identities"] = dual_ok

    # finite-difference gradient agreement on both problem families
    grad_ok = True
    rng = np.random.default_rng(0)
    quad = dpp2.quadratic_pl(4, 3, rank_deficit=1, seed=3)
    for prob in (problem, quad):
        for _ in range(5):
            point = rng.standard_normal(prob.dimension)
            stack = np.broadcast_to(point, (prob.n_nodes, prob.dimension))
            grads = prob.gradient(stack)
            for i in range(0, prob.n_nodes, 3):
                def value_i(p, node=i):
                    s = np.array(stack)
                    s[node] = p
                    return float(prob.value(s)[node])
                fd = finite_difference_gradient(value_i, point)
                if np.linalg.norm(grads[i] - fd) > 1e-4 * max(1.0, np.linalg.norm(fd)):
                    grad_ok = False
    checks["gradients"] = grad_ok

    # noise moments
    draws = dpp2.laplace_sample(1.3, 10**6, np.random.default_rng(5))
    se_mean = np.sqrt(2 * 1.3**2 / draws.size)
    se_var = 1.3**2 * np.sqrt(20.0 / draws.size)
    checks["laplace_moments"] = (
        abs(float(draws.mean())) <= 5 * se_mean
        and abs(float(draws.var()) - 2 * 1.3**2) <= 5 * se_var
    )

    ok = all(checks.values())
    _report("criterion 9 (structural invariants)", ok,
            ", ".join(f"{k}={'ok' if v else 'BAD'}" for k, v in checks.items()))
    assert ok, checks


def test_criterion_10_determinism(tmp_path):
    """Identical configs produce byte-identical trace and summary CSVs."""
    raw = {
        "seed": 31,
        "repeats": 2,
        "label": "determinism",
        "problem": {"kind": "logistic", "n_nodes": 8, "dimension": 3,
                    "samples_per_node": 20, "data_seed": 5},
        "network": {"kind": "geometric", "radius": 0.6, "graph_seed": 1},
        "params": {"alpha": 0.5, "beta": "auto", "rho": 0.2,
                   "eta": "random", "horizon": 60},
        "noise": {"u_e": 0.8, "u_w": 0.6, "decay": 0.85},
        "trace": {"cadence": 7},
    }
    result_a = run_experiment(config_from_dict({**raw, "output_dir": str(tmp_path / "a")}))
    result_b = run_experiment(config_from_dict({**raw, "output_dir": str(tmp_path / "b")}))
    same = [
        filecmp.cmp(pa, pb, shallow=False)
        for pa, pb in zip(result_a.trace_paths, result_b.trace_paths)
    ]
    same.append(filecmp.cmp(result_a.summary_path, result_b.summary_path, shallow=False))
    ok = all(same)
    _report("criterion 10 (byte-identical reruns)", ok,
            f"{sum(same)}/{len(same)} files identical")
    assert ok
