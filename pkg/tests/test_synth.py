import numpy as np
import pytest

from flowmend import build_incidence, conservation_residual, find_base_set
from flowmend.errors import InfeasibleSpec
from flowmend.fileformat import serialize_network, serialize_truth
from flowmend.synth import SyntheticSpec, generate


class TestSpecValidation:
    def test_too_few_links(self):
        with pytest.raises(InfeasibleSpec):
            SyntheticSpec(node_count=5, link_count=5)

    def test_bad_fraction(self):
        with pytest.raises(InfeasibleSpec):
            SyntheticSpec(node_count=3, link_count=6, monitored_fraction=0.0)

    def test_bad_magnitude_range(self):
        with pytest.raises(InfeasibleSpec):
            SyntheticSpec(node_count=3, link_count=6,
                          corruption_magnitude_range=(100, 10))


class TestGenerate:
    def test_truth_is_positive_and_conserved(self):
        instance = generate(SyntheticSpec(node_count=9, link_count=18,
                                          monitored_fraction=0.8, corrupt_count=2, seed=1))
        network = instance.document.network
        incidence = build_incidence(network)
        flows = np.array([instance.truth.flows[link.id] for link in network.links])
        assert np.all(flows > 0)
        assert np.max(np.abs(conservation_residual(incidence, flows))) == 0.0

    def test_monitored_set_is_observable(self):
        for seed in range(4):
            instance = generate(SyntheticSpec(node_count=6, link_count=14,
                                              monitored_fraction=0.6, seed=seed))
            incidence = build_incidence(instance.document.network)
            find_base_set(incidence, incidence.columns(instance.document.monitored))

    def test_clean_spec_reproduces_truth(self):
        instance = generate(SyntheticSpec(node_count=5, link_count=10, seed=3))
        observation = instance.document.observation
        for link_id in instance.document.monitored:
            assert observation[link_id] == instance.truth.flows[link_id]

    def test_corruption_hits_exactly_the_recorded_links(self):
        spec = SyntheticSpec(node_count=7, link_count=15, corrupt_count=3,
                             corruption_magnitude_range=(1000, 5000), seed=11)
        instance = generate(spec)
        observation = instance.document.observation
        for link_id in instance.document.monitored:
            error = observation[link_id] - instance.truth.flows[link_id]
            if link_id in instance.truth.corrupted:
                assert error != 0.0
            else:
                assert error == 0.0
        assert len(instance.truth.corrupted) == 3

    def test_counts_stay_non_negative_under_noise(self):
        instance = generate(SyntheticSpec(node_count=5, link_count=12,
                                          noise_sigma=200.0, seed=8))
        assert all(v >= 0 for v in instance.document.observation.values.values())

    def test_same_seed_is_byte_identical(self):
        spec = SyntheticSpec(node_count=9, link_count=18, monitored_fraction=0.8,
                             corrupt_count=2, noise_sigma=5.0, seed=123)
        first, second = generate(spec), generate(spec)
        assert serialize_network(first.document) == serialize_network(second.document)
        assert serialize_truth(first.truth) == serialize_truth(second.truth)

    def test_corrupt_count_beyond_monitored(self):
        with pytest.raises(InfeasibleSpec):
            generate(SyntheticSpec(node_count=3, link_count=6, corrupt_count=7))
