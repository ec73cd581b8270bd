"""Acceptance suite: the package's exit criteria, one test per criterion.

Each test prints one PASS/FAIL line (visible with ``pytest -s`` or
``-rA``), checks its numeric targets at the stated tolerances, and where a
runtime budget applies, measures it.
"""

import functools
import json
import time
from itertools import combinations

import numpy as np
import pytest

from flowmend import (
    AdmmConfig,
    build_incidence,
    certify,
    correct_flows,
    find_base_set,
    kernel_basis,
    recoverability_exact,
    recoverability_inverse_power,
    recoverability_quotient,
    solve_l1_admm,
    solve_l1_exact,
    stability_constant,
)
from flowmend.cli import main as cli_main
from flowmend.errors import DegenerateSubset
from flowmend.fixtures import get_fixture
from flowmend.synth import SyntheticSpec, generate

from conftest import TOY_TRUTH


def criterion(number, description):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[criterion {number}] FAIL  {description}")
                raise
            print(f"[criterion {number}] PASS  {description}")
        return wrapper
    return decorate


# Reference estimation column for the i405 observation (18 rows).
I405_ESTIMATES = {
    1: 123714, 2: 4835, 3: 128549, 4: 15479, 5: 113070, 6: 13661,
    7: 126731, 8: 16194, 9: 110537, 10: 2757, 11: 113295, 12: 10941,
    13: 124236, 14: 139715, 15: 124322, 16: 15393, 17: 113413, 18: 10909,
}


@criterion(1, "exact recovery on the toy network (single corrupted sensor)")
def test_criterion_1_exact_recovery(toy, tmp_path):
    start = time.perf_counter()
    result = correct_flows(toy.network, toy.monitored, toy.observations["example1"])
    elapsed = time.perf_counter() - start
    assert result.flows_rounded is not None
    assert np.array_equal(result.flows_rounded, TOY_TRUTH)
    assert np.max(np.abs(result.flows - TOY_TRUTH)) < 1e-6
    assert result.objective == pytest.approx(100.0, abs=1e-6)
    assert elapsed < 1.0
    # Same result through the command-line entry point.
    out = tmp_path / "toy1.json"
    assert cli_main(["correct", "fixtures/toy-example1",
                     "--format", "machine-readable", "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    reported = {entry["id"]: entry["reported"] for entry in payload["links"]}
    assert reported == {i + 1: TOY_TRUTH[i] for i in range(6)}


@criterion(2, "stable recovery on the toy network with sensor noise")
def test_criterion_2_stable_recovery(toy):
    start = time.perf_counter()
    result = correct_flows(toy.network, toy.monitored, toy.observations["example2"],
                           check_ties=True)
    elapsed = time.perf_counter() - start
    restricted = build_incidence(toy.network)
    cols = restricted.columns(toy.monitored)
    basis = kernel_basis(restricted, find_base_set(restricted, cols))
    oracle = solve_l1_exact(basis.matrix[cols, :],
                            np.array([toy.observations["example2"][i]
                                      for i in toy.monitored]),
                            check_uniqueness=True)
    assert result.objective == pytest.approx(oracle.objective, abs=1e-6)
    if oracle.unique:
        assert np.allclose(result.x, oracle.x, atol=1e-6)
    else:
        # Tied optimum: the tie must be recorded; this solver's deterministic
        # landing point is the reference one, so the values still hold.
        assert result.possibly_nonunique is True
    assert np.max(np.abs(result.x - np.array([201.0, 303.0, 503.0]))) < 1e-6
    expected_flows = np.array([302.0, 201.0, 303.0, 200.0, 303.0, 503.0])
    assert np.max(np.abs(result.flows - expected_flows)) < 1e-6
    assert np.abs(result.flows - TOY_TRUTH).sum() == pytest.approx(12.0, abs=6e-6)
    assert elapsed < 1.0


@criterion(3, "recoverability values on all three networks, both routes")
def test_criterion_3_recoverability_values(toy, parallel, i405):
    cases = [
        (toy, [6], 2.0),
        (toy, [1], 1.0),
        (parallel, [6, 16], 1.5),
        (i405, [6], 2.0),
    ]
    start = time.perf_counter()
    for fixture, subset, target in cases:
        incidence = build_incidence(fixture.network)
        monitored = incidence.columns(fixture.monitored)
        subset_cols = incidence.columns(subset)
        basis = kernel_basis(incidence, find_base_set(incidence, monitored))
        power = recoverability_inverse_power(basis, monitored, subset_cols)
        assert abs(power.value - target) <= 1e-4, (fixture.name, subset)
        exact = recoverability_exact(basis, monitored, subset_cols)
        assert abs(exact - target) <= 1e-9, (fixture.name, subset)
    assert time.perf_counter() - start < 10.0


@criterion(4, "i405 estimation column reproduced within one vehicle")
def test_criterion_4_i405_estimation_column(i405, tmp_path):
    start = time.perf_counter()
    out = tmp_path / "i405.json"
    assert cli_main(["correct", "fixtures/i405", "--round",
                     "--format", "machine-readable", "--output", str(out)]) == 0
    elapsed = time.perf_counter() - start
    payload = json.loads(out.read_text())
    reported = {entry["id"]: entry["reported"] for entry in payload["links"]}
    for link_id, expected in I405_ESTIMATES.items():
        assert abs(reported[link_id] - expected) <= 1.0, link_id
    percents = {entry["id"]: entry["percent_difference"]
                for entry in payload["links"] if entry["percent_difference"] is not None}
    top = max(percents, key=lambda k: abs(percents[k]))
    assert top == 6
    assert abs(percents[6]) == pytest.approx(22.8, abs=0.1)
    assert elapsed < 5.0


@criterion(5, "parallel-highway corrupted sensors corrected and flagged")
def test_criterion_5_parallel_highway(parallel):
    start = time.perf_counter()
    result = correct_flows(parallel.network, parallel.monitored,
                           parallel.observations["table1"])
    elapsed = time.perf_counter() - start
    truth = parallel.ground_truth
    assert abs(result.flow_of(6) - truth[6]) < 300
    assert abs(result.flow_of(16) - truth[16]) < 300
    assert {result.suspects[0][0], result.suspects[1][0]} == {6, 16}
    assert elapsed < 5.0


@criterion(6, "solver outputs match the exact oracles on random instances")
def test_criterion_6_oracle_equivalence():
    # l1 fit: ADMM objective against the LP oracle.
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 50:
        rows = int(rng.integers(8, 17))
        cols = int(rng.integers(3, 6))
        matrix = rng.integers(-1, 2, size=(rows, cols)).astype(float)
        if np.linalg.matrix_rank(matrix) < cols:
            continue
        observed = rng.integers(0, 2000, size=rows).astype(float)
        exact = solve_l1_exact(matrix, observed)
        _, diag = solve_l1_admm(matrix, observed)
        assert diag.objective >= exact.objective - 1e-9
        assert diag.objective - exact.objective <= 1e-6 * (1.0 + exact.objective)
        checked += 1

    # Recoverability: inverse power against the sign-pattern oracle.
    rng = np.random.default_rng(77)
    values = []
    seed = 0
    while len(values) < 50:
        seed += 1
        spec = SyntheticSpec(node_count=int(rng.integers(3, 7)),
                             link_count=int(rng.integers(8, 13)), seed=seed)
        document = generate(spec).document
        incidence = build_incidence(document.network)
        monitored = incidence.columns(document.monitored)
        basis = kernel_basis(incidence, find_base_set(incidence, monitored))
        size = int(rng.integers(1, 3))
        subset = sorted(rng.choice(monitored, size=size, replace=False).tolist())
        try:
            power = recoverability_inverse_power(basis, monitored, subset)
        except DegenerateSubset:
            continue
        exact = recoverability_exact(basis, monitored, subset)
        assert power.value >= exact - 1e-6
        values.append(abs(power.value - exact) <= 1e-4)
    assert np.mean(values) >= 0.95


# The ADMM's step length along the optimal-face crawl scales with the
# shrink threshold 1/delta, so corruptions of magnitude 1e6 need a coarser
# delta and a higher iteration cap than the report-oriented defaults.
TRIAL_CONFIG = AdmmConfig(delta=0.01, max_iters=1_000_000)


def _corrupt_and_correct(fixture, subset, magnitudes):
    """Corrupt exactly the given links of a clean observation and correct."""
    observed = {link_id: fixture.ground_truth[link_id] for link_id in fixture.monitored}
    for link_id, magnitude in zip(subset, magnitudes):
        observed[link_id] = max(0.0, observed[link_id] + magnitude)
    result = correct_flows(fixture.network, fixture.monitored, observed, TRIAL_CONFIG)
    truth = np.array([fixture.ground_truth[link.id] for link in fixture.network.links])
    return result, truth


@criterion(7, "certified subsets survive arbitrary miscounts; the sharp "
              "threshold fails")
def test_criterion_7_exact_recovery_trials(toy, parallel):
    rng = np.random.default_rng(7)
    # 100 trials on certified subsets: toy {6} and parallel {6, 16}.
    for trial in range(100):
        if trial % 2 == 0:
            magnitude = int(rng.integers(-10**6, 10**6)) or 1
            result, truth = _corrupt_and_correct(toy, [6], [magnitude])
        else:
            magnitudes = [int(rng.integers(-10**6, 10**6)) or 1,
                          int(rng.integers(-10**6, 10**6)) or 1]
            result, truth = _corrupt_and_correct(parallel, [6, 16], magnitudes)
        assert result.converged
        assert result.flows_rounded is not None
        assert np.array_equal(result.flows_rounded, truth), f"trial {trial}"

    # 100 trials corrupting toy link 1, whose recoverability sits exactly at
    # the threshold: the correction is allowed to fail, and it does.
    failures = 0
    for _ in range(100):
        magnitude = int(rng.integers(-300, 10**6)) or 1
        result, truth = _corrupt_and_correct(toy, [1], [magnitude])
        if result.flows_rounded is None or not np.array_equal(result.flows_rounded, truth):
            failures += 1
    assert failures > 0


@criterion(8, "stability bound holds on every noisy trial; its constant "
              "matches full enumeration")
def test_criterion_8_stability_bound(toy, parallel, toy_incidence):
    # The toy constant at recoverability 2 equals the value from complete
    # base-set enumeration (frozen after cross-checking the oracle below).
    monitored_cols = toy_incidence.columns(toy.monitored)
    bound = stability_constant(toy_incidence, monitored_cols, alpha=2.0)
    best = np.inf
    for combo in combinations(monitored_cols, 3):
        complement = sorted(set(range(6)) - set(combo))
        sub = toy_incidence.entries[:, complement]
        if abs(np.linalg.det(sub)) < 1e-9:
            continue
        norm = np.abs(np.linalg.solve(sub, toy_incidence.entries[:, list(combo)])
                      ).sum(axis=0).max()
        best = min(best, norm + 1.0)
    assert bound.value == pytest.approx(6.0 * best)
    assert bound.value == pytest.approx(18.0)

    rng = np.random.default_rng(88)
    cases = [(toy, [6], 2.0), (parallel, [6, 16], 1.5)]
    for trial in range(60):
        fixture, subset, alpha = cases[trial % 2]
        incidence = build_incidence(fixture.network)
        monitored_cols = incidence.columns(fixture.monitored)
        lam = stability_constant(incidence, monitored_cols, alpha=alpha).value
        observed = {}
        noise_mass = 0.0
        for link_id in fixture.monitored:
            value = fixture.ground_truth[link_id]
            if link_id in subset:
                value = max(0.0, value + int(rng.integers(-10**5, 10**5)))
            else:
                noise = int(rng.integers(-3, 4))
                noise = max(noise, -int(value))  # counts stay non-negative
                value += noise
                noise_mass += abs(noise)
            observed[link_id] = value
        result = correct_flows(fixture.network, fixture.monitored, observed,
                               TRIAL_CONFIG, rounding="never")
        truth = np.array([fixture.ground_truth[link.id] for link in fixture.network.links])
        error = np.abs(result.flows - truth).sum()
        assert result.converged
        assert error <= lam * noise_mass + 1e-6, f"trial {trial}"


@criterion(9, "structural invariants on the bundled and random networks")
def test_criterion_9_structural_invariants(toy, parallel, i405):
    rng = np.random.default_rng(9)
    documents = [f.document() for f in (toy, parallel, i405)]
    for seed in range(100):
        nodes = int(rng.integers(3, 9))
        links = nodes + 1 + int(rng.integers(1, 6))
        spec = SyntheticSpec(node_count=nodes, link_count=links,
                             monitored_fraction=0.9, corrupt_count=1,
                             noise_sigma=2.0, seed=seed)
        documents.append(generate(spec).document)

    for document in documents:
        incidence = build_incidence(document.network)
        monitored = incidence.columns(document.monitored)
        basis = kernel_basis(incidence, find_base_set(incidence, monitored))
        # Kernel construction invariants.
        assert np.max(np.abs(incidence.entries @ basis.matrix)) <= 1e-10
        block = basis.matrix[list(basis.base_set.links), :]
        assert np.array_equal(block, np.eye(len(basis.base_set.links)))
        # Conservation of the corrected flows.
        if document.observation is not None:
            result = correct_flows(document.network, document.monitored,
                                   document.observation, rounding="never")
            residual = np.abs(incidence.entries @ result.flows).max()
            assert residual <= 1e-8 * (1.0 + np.abs(result.flows).max())
        # Quotient scale invariance along a random direction.
        subset = [monitored[int(rng.integers(0, len(monitored)))]]
        v = rng.standard_normal(basis.matrix.shape[1])
        if np.abs(basis.matrix[subset, :] @ v).sum() > 1e-9:
            plain = recoverability_quotient(basis, monitored, subset, v)
            for c in (0.125, -8.0):
                scaled = recoverability_quotient(basis, monitored, subset, c * v)
                assert abs(scaled - plain) <= 1e-9 * (1.0 + plain)
        # Inverse-power trace is monotone non-increasing.
        try:
            power = recoverability_inverse_power(basis, monitored, subset)
        except DegenerateSubset:
            continue
        trace = power.trace
        assert all(trace[i + 1] <= trace[i] + 1e-8 for i in range(len(trace) - 1))
