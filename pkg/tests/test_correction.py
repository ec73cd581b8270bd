import numpy as np
import pytest

from flowmend import (
    AdmmConfig,
    BaseSet,
    NotFullColumnRank,
    OracleTooLarge,
    build_incidence,
    conservation_residual,
    correct_flows,
    shrink,
    solve_l1_admm,
    solve_l1_exact,
)

from conftest import TOY_TRUTH, TOY_Z

TOY_MONITORED_ROWS = [0, 1, 3, 4, 5]
TOY_ZM = TOY_Z[TOY_MONITORED_ROWS, :]


class TestShrink:
    def test_componentwise_formula(self):
        assert np.array_equal(shrink(np.array([3.0, -0.5, 0.0]), 1.0), [2.0, 0.0, 0.0])

    def test_kills_small_vectors(self):
        z = np.array([0.4, -0.5, 0.1])
        assert np.array_equal(shrink(z, 0.5), np.zeros(3))

    def test_negative_entries(self):
        assert np.array_equal(shrink(np.array([-4.0, 2.0]), 0.5), [-3.5, 1.5])

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            shrink(np.ones(2), 0.0)


class TestAdmmConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            AdmmConfig(delta=0.0)
        with pytest.raises(ValueError):
            AdmmConfig(max_iters=0)
        with pytest.raises(ValueError):
            AdmmConfig(primal_tol=-1.0)


class TestSolveL1Admm:
    def test_single_bad_sensor(self):
        observed = np.array([300.0, 200.0, 200.0, 300.0, 600.0])
        x, diag = solve_l1_admm(TOY_ZM, observed)
        assert np.allclose(x, [200.0, 300.0, 500.0], atol=1e-6)
        assert diag.converged
        assert diag.objective == pytest.approx(100.0, abs=1e-6)

    def test_consistent_data_recovered_exactly(self):
        x_hat = np.array([123.0, -45.0, 6.0])
        observed = TOY_ZM @ x_hat
        x, diag = solve_l1_admm(TOY_ZM, observed)
        assert np.allclose(x, x_hat, atol=1e-7)
        assert diag.objective < 1e-7

    def test_noisy_observation(self):
        observed = np.array([302.0, 201.0, 198.0, 301.0, 600.0])
        x, _ = solve_l1_admm(TOY_ZM, observed)
        assert np.allclose(x, [201.0, 303.0, 503.0], atol=1e-6)

    def test_rank_deficient_restriction_rejected(self):
        with pytest.raises(NotFullColumnRank):
            solve_l1_admm(TOY_ZM[:2, :], np.zeros(2))

    def test_iteration_cap_returns_best_iterate(self):
        observed = np.array([302.0, 201.0, 198.0, 301.0, 600.0])
        x, diag = solve_l1_admm(TOY_ZM, observed, AdmmConfig(max_iters=3))
        assert not diag.converged
        assert diag.iterations == 3
        assert np.all(np.isfinite(x))


class TestSolveL1Exact:
    def test_single_bad_sensor(self):
        observed = np.array([300.0, 200.0, 200.0, 300.0, 600.0])
        result = solve_l1_exact(TOY_ZM, observed, check_uniqueness=True)
        assert result.objective == pytest.approx(100.0, abs=1e-9)
        assert np.allclose(result.x, [200.0, 300.0, 500.0], atol=1e-8)
        assert result.unique

    def test_range_member_gives_zero(self):
        observed = TOY_ZM @ np.array([10.0, 20.0, 30.0])
        result = solve_l1_exact(TOY_ZM, observed)
        assert result.objective == pytest.approx(0.0, abs=1e-9)

    def test_tie_detection(self):
        # The noisy observation has a one-dimensional optimal face: the
        # middle coordinate ranges over [301, 305].
        observed = np.array([302.0, 201.0, 198.0, 301.0, 600.0])
        result = solve_l1_exact(TOY_ZM, observed, check_uniqueness=True)
        assert not result.unique
        low, high = result.coordinate_ranges[1]
        assert low == pytest.approx(301.0, abs=1e-6)
        assert high == pytest.approx(305.0, abs=1e-6)

    def test_admm_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(1234)
        done = 0
        while done < 30:
            matrix = rng.integers(-1, 2, size=(10, 4)).astype(float)
            if np.linalg.matrix_rank(matrix) < 4:
                continue
            observed = rng.integers(0, 500, size=10).astype(float)
            exact = solve_l1_exact(matrix, observed)
            _, diag = solve_l1_admm(matrix, observed)
            assert diag.objective >= exact.objective - 1e-9
            assert diag.objective - exact.objective <= 1e-6 * (1.0 + exact.objective)
            done += 1

    def test_row_cap(self):
        with pytest.raises(OracleTooLarge):
            solve_l1_exact(np.ones((5, 1)), np.ones(5), row_cap=4)


class TestCorrectFlows:
    def test_exact_recovery_single_bad_sensor(self, toy):
        result = correct_flows(toy.network, toy.monitored, toy.observations["example1"])
        assert result.flows_rounded is not None
        assert np.array_equal(result.flows_rounded, TOY_TRUTH)
        assert np.max(np.abs(result.flows - TOY_TRUTH)) < 1e-6
        assert result.suspects[0][0] == 6
        assert result.suspects[0][1] == pytest.approx(-100.0, abs=1e-6)
        assert result.objective == pytest.approx(100.0, abs=1e-6)

    def test_stable_recovery_with_noise(self, toy):
        result = correct_flows(toy.network, toy.monitored, toy.observations["example2"],
                               check_ties=True)
        expected = np.array([302.0, 201.0, 303.0, 200.0, 303.0, 503.0])
        assert np.max(np.abs(result.flows - expected)) < 1e-6
        # the l1 norm aggregates six entries, each accurate to 1e-6
        assert np.abs(result.flows - TOY_TRUTH).sum() == pytest.approx(12.0, abs=6e-6)
        assert result.possibly_nonunique is True

    def test_conservation_of_estimate(self, toy):
        result = correct_flows(toy.network, toy.monitored, toy.observations["example2"])
        residual = conservation_residual(build_incidence(toy.network), result.flows)
        assert np.max(np.abs(residual)) <= 1e-8

    def test_base_set_invariance_when_unique(self, toy):
        # The single-bad-sensor fit has a unique minimiser, so the
        # reconstruction cannot depend on the base set used for the basis.
        first = correct_flows(toy.network, toy.monitored, toy.observations["example1"])
        second = correct_flows(toy.network, toy.monitored, toy.observations["example1"],
                               base_set=BaseSet((0, 1, 3), (2, 4, 5)))
        gap = np.abs(first.flows - second.flows).sum()
        assert gap <= 1e-6 * (1.0 + np.abs(first.flows).sum())

    def test_exact_method_agrees(self, toy):
        admm = correct_flows(toy.network, toy.monitored, toy.observations["example1"])
        exact = correct_flows(toy.network, toy.monitored, toy.observations["example1"],
                              method="exact")
        assert exact.method == "exact"
        assert np.allclose(admm.flows, exact.flows, atol=1e-6)

    def test_rounding_modes(self, toy):
        never = correct_flows(toy.network, toy.monitored, toy.observations["example1"],
                              rounding="never")
        assert never.flows_rounded is None
        fractional = dict(toy.observations["example1"].values)
        fractional[1] = 300.5
        auto = correct_flows(toy.network, toy.monitored, fractional)
        assert auto.flows_rounded is None  # non-integer input, no rounding
        forced = correct_flows(toy.network, toy.monitored, fractional, rounding="always")
        assert forced.flows_rounded is not None

    def test_missing_observation_rejected(self, toy):
        with pytest.raises(ValueError, match="without observations"):
            correct_flows(toy.network, toy.monitored, {1: 300.0})

    def test_i405_reference_estimates(self, i405):
        result = correct_flows(i405.network, i405.monitored, i405.observations["table2"])
        estimates = {link_id: result.flow_of(link_id) for link_id in i405.network.link_ids}
        assert estimates[3] == 128549
        assert estimates[5] == 113070
        assert estimates[6] == 13661
        assert estimates[14] == 139715
        # Link 6 shows by far the largest relative adjustment.
        observation = i405.observations["table2"]
        percents = {link_id: abs(estimates[link_id] - observation[link_id]) / observation[link_id]
                    for link_id in i405.monitored}
        assert max(percents, key=percents.get) == 6
        assert percents[6] * 100 == pytest.approx(22.8, abs=0.1)

    def test_parallel_flags_corrupted_sensors(self, parallel):
        result = correct_flows(parallel.network, parallel.monitored,
                               parallel.observations["table1"])
        top_two = {result.suspects[0][0], result.suspects[1][0]}
        assert top_two == {6, 16}
        assert set(result.flagged) >= {6, 16}
        truth = parallel.ground_truth
        assert abs(result.flow_of(6) - truth[6]) < 300
        assert abs(result.flow_of(16) - truth[16]) < 300
