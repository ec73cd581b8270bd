"""Road-network model and node-link incidence matrices.

Only internal junction nodes are modelled; traffic sources and sinks live
outside the network, so boundary links have one absent endpoint.  All types
are immutable after construction and all functions are pure, which makes
them safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import DegenerateNetwork, DimensionMismatch, RankDeficient

NodeId = Union[int, str]
LinkId = Union[int, str]

#: Absolute pivot tolerance for the full-row-rank check.  Incidence entries
#: are -1/0/1, so genuine pivots sit far from zero.
RANK_PIVOT_TOL = 1e-9


@dataclass(frozen=True)
class Link:
    """A directed link.  A ``None`` endpoint means the link crosses the
    network boundary on that side (it enters from, or discharges to, an
    external zone)."""

    id: LinkId
    tail: NodeId | None
    head: NodeId | None

    def __post_init__(self):
        if self.tail is None and self.head is None:
            raise ValueError(f"link {self.id!r} has no endpoint inside the network")
        if self.tail is not None and self.tail == self.head:
            raise ValueError(f"link {self.id!r} is a self-loop")


@dataclass(frozen=True)
class MonitoredSet:
    """The links equipped with flow sensors, in network link order."""

    links: tuple[LinkId, ...]

    def __contains__(self, link_id: LinkId) -> bool:
        return link_id in self.links

    def __iter__(self):
        return iter(self.links)

    def __len__(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class FlowObservation:
    """Observed cumulative counts, one per monitored link.

    Counts must be finite and non-negative.  Nothing is assumed about their
    consistency: correcting inconsistent counts is the whole point.
    """

    values: Mapping[LinkId, float]

    def __post_init__(self):
        clean: dict[LinkId, float] = {}
        for link_id, value in self.values.items():
            value = float(value)
            if not np.isfinite(value):
                raise ValueError(f"observed count for link {link_id!r} is not finite")
            if value < 0:
                raise ValueError(f"observed count for link {link_id!r} is negative ({value})")
            clean[link_id] = value
        object.__setattr__(self, "values", clean)

    def __getitem__(self, link_id: LinkId) -> float:
        return self.values[link_id]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Network:
    """A directed road network over internal (non-boundary) nodes.

    Node and link order is the declaration order of the source document;
    every matrix built from the network indexes rows and columns in exactly
    that order, so results are reproducible.
    """

    nodes: tuple[NodeId, ...]
    links: tuple[Link, ...]
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("node identifiers are not unique")
        link_ids = [link.id for link in self.links]
        if len(set(link_ids)) != len(link_ids):
            raise ValueError("link identifiers are not unique")
        node_set = set(self.nodes)
        for link in self.links:
            for endpoint in (link.tail, link.head):
                if endpoint is not None and endpoint not in node_set:
                    raise ValueError(f"link {link.id!r} references unknown node {endpoint!r}")
        if len(self.nodes) < 1:
            raise ValueError("network needs at least one node")
        if len(self.links) < 2:
            raise ValueError("network needs at least two links")
        if len(self.links) <= len(self.nodes):
            raise DegenerateNetwork(
                f"{len(self.links)} links and {len(self.nodes)} nodes leave no free "
                "flow dimension; the conservation kernel is trivial"
            )

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def link_count(self) -> int:
        return len(self.links)

    @property
    def link_ids(self) -> tuple[LinkId, ...]:
        return tuple(link.id for link in self.links)

    def monitored_set(self, link_ids: Iterable[LinkId]) -> MonitoredSet:
        """Build a monitored set, validated and canonicalised to link order."""
        wanted = set(link_ids)
        known = set(self.link_ids)
        unknown = wanted - known
        if unknown:
            raise ValueError(f"monitored links not in network: {sorted(map(str, unknown))}")
        ordered = tuple(link.id for link in self.links if link.id in wanted)
        return MonitoredSet(ordered)


@dataclass(frozen=True)
class IncidenceMatrix:
    """Dense node-link incidence matrix with index bookkeeping.

    ``entries[i, j]`` is +1 when link j ends at node i, -1 when it starts
    there, and 0 otherwise.  Boundary links have a single nonzero entry.
    """

    entries: np.ndarray
    node_ids: tuple[NodeId, ...]
    link_ids: tuple[LinkId, ...]
    node_index: Mapping[NodeId, int] = field(repr=False)
    link_index: Mapping[LinkId, int] = field(repr=False)

    @property
    def node_count(self) -> int:
        return self.entries.shape[0]

    @property
    def link_count(self) -> int:
        return self.entries.shape[1]

    def columns(self, link_ids: Iterable[LinkId]) -> list[int]:
        """Column positions for the given link ids, in ascending column order."""
        return sorted(self.link_index[link_id] for link_id in link_ids)


def _row_rank(matrix: np.ndarray, tol: float = RANK_PIVOT_TOL) -> int:
    """Row rank by Gaussian elimination with partial pivoting."""
    work = np.array(matrix, dtype=float, copy=True)
    rows, cols = work.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivot_row = rank + int(np.argmax(np.abs(work[rank:, col])))
        if abs(work[pivot_row, col]) <= tol:
            continue
        if pivot_row != rank:
            work[[rank, pivot_row]] = work[[pivot_row, rank]]
        below = work[rank + 1:, col] / work[rank, col]
        work[rank + 1:] -= np.outer(below, work[rank])
        rank += 1
    return rank


def build_incidence(network: Network) -> IncidenceMatrix:
    """Build the node-link incidence matrix of a network.

    Raises ``DegenerateNetwork`` when there are not more links than nodes,
    and ``RankDeficient`` when the conservation equations are linearly
    dependent (the matrix must have full row rank for the kernel
    construction downstream).
    """
    n, l = network.node_count, network.link_count
    if l <= n:
        raise DegenerateNetwork(f"{l} links and {n} nodes leave no free flow dimension")
    node_index = {node_id: i for i, node_id in enumerate(network.nodes)}
    link_index = {link.id: j for j, link in enumerate(network.links)}
    entries = np.zeros((n, l))
    for j, link in enumerate(network.links):
        if link.tail is not None:
            entries[node_index[link.tail], j] = -1.0
        if link.head is not None:
            entries[node_index[link.head], j] = 1.0
    rank = _row_rank(entries)
    if rank < n:
        raise RankDeficient(n, rank)
    entries.setflags(write=False)
    return IncidenceMatrix(
        entries=entries,
        node_ids=network.nodes,
        link_ids=network.link_ids,
        node_index=node_index,
        link_index=link_index,
    )


def conservation_residual(incidence: IncidenceMatrix, flows: np.ndarray) -> np.ndarray:
    """Per-node conservation residual of a full flow vector.

    The result is the zero vector exactly when, at every node, inflow
    equals outflow.
    """
    flows = np.asarray(flows, dtype=float)
    if flows.shape != (incidence.link_count,):
        raise DimensionMismatch(
            f"flow vector has shape {flows.shape}, expected ({incidence.link_count},)"
        )
    return incidence.entries @ flows
