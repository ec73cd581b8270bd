"""Bundled example networks with observed counts.

Three networks ship with the package:

``toy``
    Three junctions, six links.  Two boundary links feed junction 1, one
    boundary link drains junction 3, and link 3 is unmetered.  Comes with
    an exact observation whose only error is an inflated count on link 6,
    and a noisy variant with small errors on every sensor besides the
    large one.

``parallel-highway``
    Two parallel four-junction highways joined by crossing connectors and
    a median junction: 9 nodes, 18 links, 15 monitored (links 3, 10 and 14
    carry no sensors).  Synthetic ground truth is known; the observation
    severely corrupts links 6 and 16 and adds small noise elsewhere.

``i405``
    A mainline-with-ramps freeway stretch modelled after I-405 northbound
    in Irvine: 9 junctions, 18 links, with daily cumulative loop-detector
    counts and no sensors on links 3, 13 and 14.  Link 4 is a collector
    that leaves the mainline at junction 2 and rejoins at junction 7.  No
    ground truth exists for this data; the sensor on link 6 is known to be
    unhealthy.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .fileformat import GroundTruth, NetworkDocument
from .network import FlowObservation, Link, LinkId, MonitoredSet, Network


@dataclass(frozen=True)
class Fixture:
    """A bundled network with named observation variants."""

    name: str
    network: Network
    monitored: MonitoredSet
    observations: dict[str, FlowObservation]
    default_observation: str
    ground_truth: dict[LinkId, float] | None
    corrupted: tuple[LinkId, ...] = ()

    def document(self, variant: str | None = None) -> NetworkDocument:
        variant = variant or self.default_observation
        return NetworkDocument(network=self.network, monitored=self.monitored,
                               observation=self.observations[variant])

    def truth(self) -> GroundTruth | None:
        if self.ground_truth is None:
            return None
        return GroundTruth(flows=dict(self.ground_truth), corrupted=self.corrupted,
                           name=self.name)


def _toy() -> Fixture:
    network = Network(
        name="toy",
        nodes=(1, 2, 3),
        links=(
            Link(1, None, 1),
            Link(2, None, 1),
            Link(3, 1, 2),
            Link(4, 1, 3),
            Link(5, 2, 3),
            Link(6, 3, None),
        ),
    )
    monitored = network.monitored_set([1, 2, 4, 5, 6])
    observations = {
        # Only the count on link 6 is wrong (inflated by 100).
        "example1": FlowObservation({1: 300, 2: 200, 4: 200, 5: 300, 6: 600}),
        # Same large error plus small noise on every other sensor.
        "example2": FlowObservation({1: 302, 2: 201, 4: 198, 5: 301, 6: 600}),
    }
    truth = {1: 300.0, 2: 200.0, 3: 300.0, 4: 200.0, 5: 300.0, 6: 500.0}
    return Fixture(name="toy", network=network, monitored=monitored,
                   observations=observations, default_observation="example1",
                   ground_truth=truth, corrupted=(6,))


def _parallel_highway() -> Fixture:
    # Lower highway: 1 -> 3 -> 6 -> 8; upper highway: 2 -> 4 -> 7 -> 9;
    # node 5 is the median junction.  Links 4/5 and 14/15 are the crossing
    # connectors, 8/10 feed the median and 9/11 drain it.
    network = Network(
        name="parallel-highway",
        nodes=(1, 2, 3, 4, 5, 6, 7, 8, 9),
        links=(
            Link(1, None, 1),
            Link(2, None, 2),
            Link(3, 1, 3),
            Link(4, 1, 4),
            Link(5, 2, 3),
            Link(6, 2, 4),
            Link(7, 3, 6),
            Link(8, 3, 5),
            Link(9, 5, 6),
            Link(10, 4, 5),
            Link(11, 5, 7),
            Link(12, 4, 7),
            Link(13, 6, 8),
            Link(14, 6, 9),
            Link(15, 7, 8),
            Link(16, 7, 9),
            Link(17, 8, None),
            Link(18, 9, None),
        ),
    )
    monitored = network.monitored_set(
        [1, 2, 4, 5, 6, 7, 8, 9, 11, 12, 13, 15, 16, 17, 18])
    observations = {
        "table1": FlowObservation({
            1: 9950, 2: 69887, 4: 1997, 5: 15010, 6: 39751, 7: 20043, 8: 3014,
            9: 6977, 11: 5045, 12: 47770, 13: 25397, 15: 20000, 16: 45302,
            17: 45912, 18: 34332,
        }),
    }
    truth = {
        1: 10000.0, 2: 70000.0, 3: 8000.0, 4: 2000.0, 5: 15000.0, 6: 55000.0,
        7: 20000.0, 8: 3000.0, 9: 7000.0, 10: 9000.0, 11: 5000.0, 12: 48000.0,
        13: 25500.0, 14: 1500.0, 15: 20000.0, 16: 33000.0, 17: 45500.0,
        18: 34500.0,
    }
    return Fixture(name="parallel-highway", network=network, monitored=monitored,
                   observations=observations, default_observation="table1",
                   ground_truth=truth, corrupted=(6, 16))


def _i405() -> Fixture:
    network = Network(
        name="i405",
        nodes=(1, 2, 3, 4, 5, 6, 7, 8, 9),
        links=(
            Link(1, None, 1),
            Link(2, None, 1),
            Link(3, 1, 2),
            Link(4, 2, 7),
            Link(5, 2, 3),
            Link(6, None, 3),
            Link(7, 3, 4),
            Link(8, 4, None),
            Link(9, 4, 5),
            Link(10, None, 5),
            Link(11, 5, 6),
            Link(12, None, 6),
            Link(13, 6, 7),
            Link(14, 7, 8),
            Link(15, 8, 9),
            Link(16, 8, None),
            Link(17, 9, None),
            Link(18, 9, None),
        ),
    )
    monitored = network.monitored_set(
        [1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 15, 16, 17, 18])
    observations = {
        "table2": FlowObservation({
            1: 123714, 2: 4835, 4: 15479, 5: 105748, 6: 11127, 7: 127073,
            8: 16194, 9: 110997, 10: 2809, 11: 113002, 12: 10941, 15: 124437,
            16: 15393, 17: 113411, 18: 10907,
        }),
    }
    return Fixture(name="i405", network=network, monitored=monitored,
                   observations=observations, default_observation="table2",
                   ground_truth=None)


FIXTURES: dict[str, Fixture] = {
    fixture.name: fixture for fixture in (_toy(), _parallel_highway(), _i405())
}

#: File stem -> (fixture name, observation variant) for the bundled YAML
#: documents.  ``toy`` doubles as its exact-observation variant.
FIXTURE_FILES: dict[str, tuple[str, str]] = {
    "toy": ("toy", "example1"),
    "toy-example1": ("toy", "example1"),
    "toy-example2": ("toy", "example2"),
    "parallel": ("parallel-highway", "table1"),
    "i405": ("i405", "table2"),
}

#: File stem -> fixture name for bundled ground-truth sidecars.
TRUTH_FILES: dict[str, str] = {
    "toy": "toy",
    "parallel": "parallel-highway",
}


def get_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; have {sorted(FIXTURES)}") from None


def fixture_document(stem: str) -> NetworkDocument:
    """The network document behind a bundled file stem (e.g. ``toy-example2``)."""
    name, variant = FIXTURE_FILES[stem]
    return get_fixture(name).document(variant)


def bundled_text(filename: str) -> str | None:
    """Contents of a bundled fixture file, or None when absent."""
    candidate = resources.files(__package__).joinpath("fixtures").joinpath(filename)
    if candidate.is_file():
        return candidate.read_text()
    return None
