"""Deterministic synthetic instances: network, truth, corrupted observation.

Networks are layered: a spine of chain links guarantees that every junction
can be walked back to an entry link and forward to an exit link, and all
extra links point downstream, so routing integer path flows produces a
ground truth that is positive on every link and conserved exactly.
Corruption then injects a few large errors and optional rounded Gaussian
noise into the monitored counts.  Everything is driven by one seeded
generator, so equal specs give identical instances byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleSpec, NoBaseSet
from .fileformat import GroundTruth, NetworkDocument
from .kernel import find_base_set
from .network import FlowObservation, Link, LinkId, Network, build_incidence


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of one synthetic instance.

    ``monitored_fraction`` is a target: links are dropped from the
    monitored set only while at least one base set survives inside it, so
    the realised fraction can be larger.  Corruption magnitudes are drawn
    uniformly from ``corruption_magnitude_range`` with random sign, then
    clipped so counts stay non-negative.
    """

    node_count: int
    link_count: int
    monitored_fraction: float = 1.0
    corrupt_count: int = 0
    corruption_magnitude_range: tuple[int, int] = (10_000, 100_000)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.node_count < 1:
            raise InfeasibleSpec("node_count must be at least 1")
        if self.link_count < self.node_count + 1:
            raise InfeasibleSpec(
                f"need at least {self.node_count + 1} links for {self.node_count} nodes")
        if not 0 < self.monitored_fraction <= 1:
            raise InfeasibleSpec("monitored_fraction must lie in (0, 1]")
        if self.corrupt_count < 0:
            raise InfeasibleSpec("corrupt_count cannot be negative")
        low, high = self.corruption_magnitude_range
        if low < 1 or high < low:
            raise InfeasibleSpec("corruption magnitude range must satisfy 1 <= low <= high")
        if self.noise_sigma < 0:
            raise InfeasibleSpec("noise_sigma cannot be negative")


@dataclass(frozen=True)
class SyntheticInstance:
    document: NetworkDocument
    truth: GroundTruth


def _build_links(spec: SyntheticSpec, rng: np.random.Generator) -> list[Link]:
    n = spec.node_count
    links: list[Link] = [Link(1, None, 1)]
    links += [Link(i + 1, i, i + 1) for i in range(1, n)]
    links.append(Link(n + 1, n, None))
    next_id = n + 2
    while len(links) < spec.link_count:
        kind = rng.integers(0, 4)
        if kind == 0 and n > 1:  # extra entry
            links.append(Link(next_id, None, int(rng.integers(1, n + 1))))
        elif kind == 1 and n > 1:  # extra exit
            links.append(Link(next_id, int(rng.integers(1, n + 1)), None))
        elif n > 1:  # internal, pointing downstream
            tail = int(rng.integers(1, n))
            head = int(rng.integers(tail + 1, n + 1))
            links.append(Link(next_id, tail, head))
        else:
            links.append(Link(next_id, None, 1) if kind % 2 else Link(next_id, 1, None))
        next_id += 1
    return links


def _route_paths(network: Network, rng: np.random.Generator) -> dict[LinkId, int]:
    """Positive conserved integer flows by routing random entry-to-exit paths."""
    into: dict[int, list[Link]] = {}
    outof: dict[int, list[Link]] = {}
    for link in network.links:
        if link.head is not None:
            into.setdefault(link.head, []).append(link)
        if link.tail is not None:
            outof.setdefault(link.tail, []).append(link)

    def walk_back(node: int) -> list[LinkId]:
        path: list[LinkId] = []
        while node is not None:
            choices = into[node]
            link = choices[int(rng.integers(0, len(choices)))]
            path.append(link.id)
            node = link.tail
        return path

    def walk_forward(node: int) -> list[LinkId]:
        path: list[LinkId] = []
        while node is not None:
            choices = outof[node]
            link = choices[int(rng.integers(0, len(choices)))]
            path.append(link.id)
            node = link.head
        return path

    flows: dict[LinkId, int] = {link.id: 0 for link in network.links}
    for link in network.links:
        amount = int(rng.integers(50, 500))
        segment: list[LinkId] = [link.id]
        if link.tail is not None:
            segment += walk_back(link.tail)
        if link.head is not None:
            segment += walk_forward(link.head)
        for link_id in segment:
            flows[link_id] += amount
    return flows


def _select_monitored(network: Network, spec: SyntheticSpec,
                      rng: np.random.Generator) -> list[LinkId]:
    incidence = build_incidence(network)
    monitored = set(incidence.link_ids)
    target = max(1, math.ceil(spec.monitored_fraction * network.link_count))
    order = rng.permutation(network.link_count)
    for idx in order:
        if len(monitored) <= target:
            break
        link_id = incidence.link_ids[int(idx)]
        trial = monitored - {link_id}
        try:
            find_base_set(incidence, incidence.columns(trial))
        except NoBaseSet:
            continue
        monitored = trial
    return [link_id for link_id in incidence.link_ids if link_id in monitored]


def generate(spec: SyntheticSpec) -> SyntheticInstance:
    """Generate one synthetic instance; deterministic per spec."""
    rng = np.random.default_rng(spec.seed)
    name = f"synthetic-{spec.seed}"
    for _ in range(100):
        links = _build_links(spec, rng)
        network = Network(nodes=tuple(range(1, spec.node_count + 1)),
                          links=tuple(links), name=name)
        try:
            build_incidence(network)
        except Exception:
            continue
        break
    else:
        raise InfeasibleSpec("could not realise a full-rank network for this spec")

    truth_flows = _route_paths(network, rng)
    monitored = _select_monitored(network, spec, rng)
    if spec.corrupt_count > len(monitored):
        raise InfeasibleSpec(
            f"cannot corrupt {spec.corrupt_count} of {len(monitored)} monitored links")

    corrupted = sorted(
        rng.choice(len(monitored), size=spec.corrupt_count, replace=False).tolist())
    corrupted_ids = [monitored[i] for i in corrupted]
    observed: dict[LinkId, float] = {}
    low, high = spec.corruption_magnitude_range
    for link_id in monitored:
        value = float(truth_flows[link_id])
        if link_id in corrupted_ids:
            magnitude = int(rng.integers(low, high + 1))
            sign = 1 if rng.integers(0, 2) else -1
            value = max(0.0, value + sign * magnitude)
        elif spec.noise_sigma > 0:
            value = max(0.0, value + float(np.rint(rng.normal(0.0, spec.noise_sigma))))
        observed[link_id] = value

    document = NetworkDocument(
        network=network,
        monitored=network.monitored_set(monitored),
        observation=FlowObservation(observed),
    )
    truth = GroundTruth(flows={k: float(v) for k, v in truth_flows.items()},
                        corrupted=tuple(corrupted_ids), name=name)
    return SyntheticInstance(document=document, truth=truth)
