import numpy as np
import pytest

from ciwave.ci_constraints import CiConstraintSet, build_constraints, check_feasible, psk_alphabet
from ciwave.convex_kernel import (
    LinearObjective,
    SdpSolution,
    armijo_linesearch_true_objective,
    enforce_feasible,
    exact_linesearch_fixed_phi,
    gaussian_randomization,
    phase1_margin,
    project_ci,
    solve_concave_qp_over_ci,
    solve_linear_over_ci,
    solve_sdr,
    strictly_feasible_point,
)
from ciwave.errors import ContractViolation, InfeasibleProblem
from ciwave.signal_model import Scenario, sinr_matrix, sinr_quadratic, steering_tx

from conftest import DEG, make_instance, random_feasible
from oracles import hit_and_run, lp_oracle, qp_oracle


def no_user_set(n_tx=8, power=1000.0):
    return CiConstraintSet(
        rotated_channels=np.zeros((0, n_tx), dtype=complex),
        thresholds=np.zeros(0),
        tan_phi=1.0,
        power_budget=power,
        psk_order=4,
    )


class TestProjection:
    def test_projection_lands_in_set(self, rng):
        _, _, _, cs = make_instance(seed=20)
        for _ in range(10):
            v = 3 * cs.radius * (rng.standard_normal(8) + 1j * rng.standard_normal(8))
            x = project_ci(cs, v, tol=1e-13, max_passes=2000)
            assert cs.margins(x).min() >= -1e-8
            assert cs.power_margin(x) >= -1e-8

    def test_projection_minimizes_distance(self, rng):
        # Dykstra's output should be closer to the query than random feasible points
        _, _, _, cs = make_instance(seed=21)
        v = 2 * cs.radius * (rng.standard_normal(8) + 1j * rng.standard_normal(8))
        x = project_ci(cs, v, tol=1e-13, max_passes=2000)
        dist = np.linalg.norm(v - x)
        for y in random_feasible(cs, rng, 50):
            assert dist <= np.linalg.norm(v - y) + 1e-6

    def test_interior_point_fixed(self, rng):
        _, _, _, cs = make_instance(seed=22)
        x0 = strictly_feasible_point(cs)
        assert np.allclose(project_ci(cs, x0), x0)


class TestFeasibility:
    def test_strictly_feasible_point(self):
        for seed in range(5):
            _, _, _, cs = make_instance(seed=seed)
            x = strictly_feasible_point(cs)
            assert cs.margins(x).min() > 0
            assert cs.power_margin(x) > 0

    def test_infeasible_certificate(self):
        # thresholds far beyond what the power budget allows
        sc = Scenario(n_tx=2, n_rx=2, target_angle=0.0, target_power=1.0,
                      user_noise_vars=(1.0,), power_budget=1.0, psk_order=4)
        h = np.array([0.1 + 0j, 0.0 + 0j])
        cs = build_constraints(sc, [h], [psk_alphabet(4)[0]], [1e6])
        with pytest.raises(InfeasibleProblem) as exc:
            strictly_feasible_point(cs)
        assert exc.value.certificate < -1e-7
        assert exc.value.worst_user == 0

    def test_phase1_brackets_saddle(self):
        _, _, _, cs = make_instance(seed=23, k=2)
        upper, achieved, x_star, lam = phase1_margin(cs)
        assert achieved <= upper + 1e-9
        assert np.isclose(lam.sum(), 1.0)
        assert cs.margins(x_star).min() == pytest.approx(achieved, abs=1e-9)


class TestLinearSolver:
    def test_ball_only_closed_form(self, rng):
        cs = no_user_set()
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        x = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-9)
        assert np.allclose(x, -cs.radius * c / np.linalg.norm(c), atol=1e-6)

    def test_zero_objective_returns_feasible(self):
        _, _, _, cs = make_instance(seed=24)
        x = solve_linear_over_ci(LinearObjective(np.zeros(8, dtype=complex)), cs)
        assert check_feasible(cs, x).feasible

    def test_matches_grid_oracle_tiny(self, rng):
        for seed in range(5):
            _, _, _, cs = make_instance(seed=30 + seed, n_tx=2, n_rx=2, k=1,
                                        clutter_angles=(-20 * DEG,))
            c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            x = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-9)
            val = np.real(np.vdot(c, x))
            oracle_val, _ = lp_oracle(c, cs, seed=seed)
            assert val <= oracle_val + 0.01 * (1 + abs(oracle_val))
            assert cs.margins(x).min() >= -1e-9

    def test_beats_hit_and_run_cloud(self, rng):
        _, _, _, cs = make_instance(seed=25, k=3)
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        x = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-8)
        val = np.real(np.vdot(c, x))
        x0 = strictly_feasible_point(cs)
        for y in hit_and_run(cs, x0, 10000, rng):
            assert val <= np.real(np.vdot(c, y)) + 1e-6

    def test_deterministic(self, rng):
        _, _, _, cs = make_instance(seed=26)
        c = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        x1 = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-9)
        x2 = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-9)
        assert np.array_equal(x1, x2)


class TestConcaveQp:
    def test_rejects_indefinite(self):
        _, _, _, cs = make_instance(seed=27)
        with pytest.raises(ContractViolation):
            solve_concave_qp_over_ci(np.eye(8, dtype=complex), cs)

    def test_zero_matrix_returns_feasible(self):
        _, _, _, cs = make_instance(seed=28)
        x = solve_concave_qp_over_ci(np.zeros((8, 8), dtype=complex), cs)
        assert check_feasible(cs, x).feasible

    def test_negative_identity_minimum_norm(self):
        # CI thresholds exclude the origin; the best point has minimal norm
        _, _, _, cs = make_instance(seed=29, n_tx=2, n_rx=2, k=1,
                                    clutter_angles=(-20 * DEG,))
        x = solve_concave_qp_over_ci(-np.eye(2, dtype=complex), cs, tol=1e-8)
        oracle_val, _ = qp_oracle(-np.eye(2, dtype=complex), cs)
        got = -np.linalg.norm(x) ** 2
        assert got >= oracle_val - 0.01 * (1 + abs(oracle_val))

    def test_eigenshift_matches_conditional_gradient(self, rng):
        # same concave maximization solved by an independent conditional-
        # gradient loop built on the linear solver
        scenario, _, _, cs = make_instance(seed=31, n_tx=4, n_rx=4, k=2)
        x0 = strictly_feasible_point(cs)
        phi = sinr_matrix(scenario, x0)
        lam = np.linalg.eigvalsh(phi).max()
        q = phi - lam * np.eye(4)
        x_qp = solve_concave_qp_over_ci(q, cs, tol=1e-8)
        val_qp = np.real(x_qp.conj() @ (q @ x_qp))

        x = x0.copy()
        for _ in range(800):
            grad = -2.0 * (q @ x)  # minimize -x^H q x
            x_lin = solve_linear_over_ci(LinearObjective(grad), cs, tol=1e-9)
            d = x_lin - x
            g = float(np.real(grad.conj() @ d))
            if abs(g) < 1e-9:
                break
            # exact step for the 1-D concave-quadratic surrogate
            num = -g / 2.0
            den = float(np.real(d.conj() @ ((-q) @ d)))
            t = 1.0 if den <= 0 else min(1.0, num / den)
            if t <= 0:
                break
            x = x + t * d
        val_fw = np.real(x.conj() @ (q @ x))
        scale = max(1.0, abs(val_qp), abs(val_fw))
        assert val_qp >= val_fw - 1e-4 * scale

    def test_warm_start_consistency(self, rng):
        _, _, _, cs = make_instance(seed=32, n_tx=4, n_rx=4, k=2)
        q = -np.eye(4, dtype=complex)
        cold = solve_concave_qp_over_ci(q, cs, tol=1e-8)
        warm = solve_concave_qp_over_ci(q, cs, tol=1e-8, x0=random_feasible(cs, rng)[0])
        v1 = np.real(cold.conj() @ (q @ cold))
        v2 = np.real(warm.conj() @ (q @ warm))
        assert abs(v1 - v2) <= 1e-4 * max(1.0, abs(v1))


class TestLineSearches:
    def test_zero_direction(self, rng):
        scenario, _, _, cs = make_instance(seed=33)
        x = random_feasible(cs, rng)[0]
        phi = sinr_matrix(scenario, x)
        assert exact_linesearch_fixed_phi(phi, x, np.zeros_like(x)) == 0.0
        assert armijo_linesearch_true_objective(scenario, x, np.zeros_like(x)) == 0.0

    def test_endpoint_rule_matches_scan(self, rng):
        scenario, _, _, cs = make_instance(seed=34)
        for _ in range(10):
            x, y = random_feasible(cs, rng, 2)
            phi = sinr_matrix(scenario, x)
            d = y - x
            t_star = exact_linesearch_fixed_phi(phi, x, d)
            ts = np.linspace(0.0, 1.0, 1001)
            vals = [-np.real((x + t * d).conj() @ (phi @ (x + t * d))) for t in ts]
            assert vals[0 if t_star == 0.0 else -1] == pytest.approx(min(vals), abs=1e-9)

    def test_descent_direction_full_step(self, rng):
        scenario, _, _, cs = make_instance(seed=35)
        x = random_feasible(cs, rng)[0]
        phi = sinr_matrix(scenario, x)
        c = -2.0 * (phi @ x)
        x_lin = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-9)
        d = x_lin - x
        if np.real(c.conj() @ d) < -1e-8:
            assert exact_linesearch_fixed_phi(phi, x, d) == 1.0

    def test_ascent_direction_zero_step(self, rng):
        scenario, _, _, cs = make_instance(seed=36)
        x = random_feasible(cs, rng)[0]
        phi = sinr_matrix(scenario, x)
        d = phi @ x  # increases x^H Phi x, so it *increases* the minimized form
        if np.real((-2.0 * (phi @ x)).conj() @ d) >= 0:
            assert exact_linesearch_fixed_phi(phi, x, d) in (0.0, 1.0)
            assert armijo_linesearch_true_objective(scenario, x, d) == 0.0

    def test_armijo_agrees_with_exact_without_clutter(self, rng):
        # no clutter: the exact objective equals the frozen-Phi quadratic
        sc = Scenario(n_tx=4, n_rx=4, target_angle=0.0, target_power=10.0,
                      user_noise_vars=(1.0,), power_budget=100.0, psk_order=4)
        h = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
        cs = build_constraints(sc, [h], [psk_alphabet(4)[1]], [10.0])
        x = strictly_feasible_point(cs)
        phi = sinr_matrix(sc, x)
        c = -2.0 * (phi @ x)
        d = solve_linear_over_ci(LinearObjective(c), cs, tol=1e-9) - x
        if np.real(c.conj() @ d) < -1e-9:
            assert exact_linesearch_fixed_phi(phi, x, d) == 1.0
            assert armijo_linesearch_true_objective(sc, x, d) == 1.0

    def test_armijo_never_increases_objective(self, rng):
        scenario, _, _, cs = make_instance(seed=37)
        for x, y in zip(random_feasible(cs, rng, 5), random_feasible(cs, rng, 5)):
            d = y - x
            t = armijo_linesearch_true_objective(scenario, x, d)
            if t > 0:
                f0 = -sinr_quadratic(scenario, x)
                ft = -sinr_quadratic(scenario, x + t * d)
                assert ft <= f0 + 1e-12 * abs(f0)

    def test_armijo_parameter_validation(self, rng):
        scenario, _, _, cs = make_instance(seed=38)
        x = random_feasible(cs, rng)[0]
        with pytest.raises(ContractViolation):
            armijo_linesearch_true_objective(scenario, x, x, shrink=1.5)


def tiny_sdp_instance(seed, gamma_db=15.0):
    scenario, _, _, cs = make_instance(seed=seed, n_tx=2, n_rx=2, k=1,
                                       clutter_angles=(-20 * DEG,), gamma_db=gamma_db)
    x0 = strictly_feasible_point(cs)
    phi = sinr_matrix(scenario, x0)
    return scenario, cs, phi


class TestSdp:
    def test_identity_objective_no_users(self):
        cs = no_user_set(n_tx=3, power=50.0)
        sol = solve_sdr(np.eye(3, dtype=complex), cs, tol=1e-7)
        assert sol.objective == pytest.approx(50.0, rel=1e-4)
        assert sol.upper_bound >= sol.objective - 1e-9
        assert sol.x_tilde[-1, -1] == pytest.approx(1.0, abs=1e-8)

    def test_solution_invariants(self):
        _, cs, phi = tiny_sdp_instance(40)
        sol = solve_sdr(phi, cs, tol=1e-7)
        m = sol.x_tilde.shape[0]
        lam = np.linalg.eigvalsh(sol.x_tilde)
        assert lam.min() >= -1e-8
        assert sol.x_tilde[m - 1, m - 1] == pytest.approx(1.0, abs=1e-8)
        # linear constraints hold within the solver's residual scale
        slack = 1e-4 * max(1.0, cs.power_budget)
        assert np.real(np.trace(sol.x_block)) <= cs.power_budget + slack
        assert cs.margins(sol.x).min() >= -slack
        assert all(r < 1e-6 for r in sol.kkt_residuals)

    def test_upper_bound_dominates_grid_oracle(self):
        from oracles import qp_oracle

        for seed in (41, 42):
            _, cs, phi = tiny_sdp_instance(seed)
            sol = solve_sdr(phi, cs, tol=1e-7)
            oracle_val, _ = qp_oracle(phi, cs, seed=seed)
            assert sol.objective >= oracle_val - 1e-4 * (1 + abs(oracle_val))
            assert sol.upper_bound >= oracle_val - 1e-9

    def test_upper_bound_dominates_feasible_points(self, rng):
        _, cs, phi = tiny_sdp_instance(43)
        sol = solve_sdr(phi, cs, tol=1e-7)
        for x in random_feasible(cs, rng, 50):
            val = np.real(x.conj() @ (phi @ x))
            assert sol.upper_bound >= val - 1e-9

    def test_rank_one_tight_instance(self):
        # clutter-free, single user aligned with the steering direction and a
        # QoS threshold that uses up nearly the whole budget: the optimal
        # lifted matrix collapses onto x x^H
        sc = Scenario(n_tx=3, n_rx=3, target_angle=0.0, target_power=10.0,
                      user_noise_vars=(1.0,), power_budget=16.0, psk_order=4)
        at = steering_tx(sc, 0.0)
        s = psk_alphabet(4)[0]
        h = np.conj(at) * np.conj(s.value)
        gamma = 15.99
        cs = build_constraints(sc, [h], [s], [gamma])
        phi = sinr_matrix(sc, np.ones(3, dtype=complex))
        sol = solve_sdr(phi, cs, tol=1e-8)
        lam = np.linalg.eigvalsh(sol.x_block)
        assert lam[-1] / lam.sum() > 0.999
        achieved = np.real(sol.x.conj() @ (phi @ sol.x))
        assert achieved >= 0.999 * sol.objective

    def test_deterministic(self):
        _, cs, phi = tiny_sdp_instance(44)
        s1 = solve_sdr(phi, cs, tol=1e-7)
        s2 = solve_sdr(phi, cs, tol=1e-7)
        assert np.array_equal(s1.x_tilde, s2.x_tilde)
        assert s1.objective == s2.objective


class TestRandomization:
    def test_rank_one_fixed_point(self):
        # zero covariance: every draw is x*, repaired onto the sphere
        cs = no_user_set(n_tx=2, power=9.0)
        x_star = np.array([1.0 + 0j, 1.0 + 0j])
        m = np.zeros((3, 3), dtype=complex)
        m[:2, :2] = np.outer(x_star, x_star.conj())
        m[:2, 2] = x_star
        m[2, :2] = x_star.conj()
        m[2, 2] = 1.0
        sol = SdpSolution(x_tilde=m, objective=1.0, kkt_residuals=(0, 0, 0),
                          upper_bound=1.0, phi=np.eye(2, dtype=complex),
                          iterations=0, wall_time=0.0)
        got = gaussian_randomization(sol, cs, 5, rng_seed=1)
        assert np.allclose(got, x_star * 3.0 / np.linalg.norm(x_star))

    def test_best_of_n_monotone(self):
        _, cs, phi = tiny_sdp_instance(45)
        sol = solve_sdr(phi, cs, tol=1e-7)
        val = lambda x: np.real(x.conj() @ (phi @ x))
        x1 = gaussian_randomization(sol, cs, 1, rng_seed=7)
        x100 = gaussian_randomization(sol, cs, 100, rng_seed=7)
        assert val(x100) >= val(x1) - 1e-12

    def test_output_feasible_on_paper_scenario(self):
        scenario, _, _, cs = make_instance(seed=46, n_tx=8, n_rx=8, k=5)
        x0 = strictly_feasible_point(cs)
        phi = sinr_matrix(scenario, x0)
        sol = solve_sdr(phi, cs, tol=1e-6)
        x = gaussian_randomization(sol, cs, 100, rng_seed=3)
        assert cs.margins(x).min() >= -1e-9
        assert cs.power_margin(x) >= -1e-9

    def test_sample_count_validated(self):
        _, cs, phi = tiny_sdp_instance(47)
        sol = solve_sdr(phi, cs, tol=1e-6)
        with pytest.raises(ContractViolation):
            gaussian_randomization(sol, cs, 0, rng_seed=1)


class TestEnforceFeasible:
    def test_repairs_tiny_violation(self, rng):
        _, _, _, cs = make_instance(seed=48)
        x = random_feasible(cs, rng)[0]
        g, r = cs.halfspaces()
        bad = x - 1e-7 * g[0] / np.linalg.norm(g[0])
        fixed = enforce_feasible(cs, bad)
        assert cs.margins(fixed).min() >= -1e-12
        assert np.linalg.norm(fixed - bad) < 1e-4 * cs.radius
