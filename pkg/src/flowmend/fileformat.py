"""Versioned on-disk formats: network documents, truth sidecars, reports.

Network documents and ground-truth sidecars are YAML with an explicit
``format`` tag; correction reports are JSON and embed the network they were
computed from, so they can be validated against a sidecar without access to
the original input file.  Serialisation is canonical: identical inputs give
byte-identical output, and parse -> serialise -> parse is the identity.

Grammar of a network document (version ``flowmend-network/1``)::

    format: flowmend-network/1
    name: <optional label>
    nodes: [<node id>, ...]
    links:
    - {id: <link id>, tail: <node id or null>, head: <node id or null>}
    - ...
    monitored: [<link id>, ...]
    observed:            # optional; required for correction runs
      <link id>: <count>

A ``null`` endpoint marks a boundary link (the other end lies outside the
modelled network).  Counts must be finite and non-negative, and exactly the
monitored links may carry one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import yaml

from .correction import CorrectionResult
from .errors import (
    DuplicateId,
    FormatSyntaxError,
    MissingObservation,
    NegativeCount,
    NetworkFormatError,
    UnknownLink,
    UnknownNode,
    UnmonitoredObservation,
)
from .kernel import find_base_set
from .network import (
    FlowObservation,
    IncidenceMatrix,
    Link,
    LinkId,
    MonitoredSet,
    Network,
    build_incidence,
)

NETWORK_FORMAT = "flowmend-network/1"
TRUTH_FORMAT = "flowmend-truth/1"
REPORT_FORMAT = "flowmend-report/1"


@dataclass(frozen=True)
class NetworkDocument:
    """A parsed network file: topology, monitored set, optional counts."""

    network: Network
    monitored: MonitoredSet
    observation: FlowObservation | None


@dataclass(frozen=True)
class GroundTruth:
    """A ground-truth sidecar: the full flow vector, optionally the links
    whose observations were deliberately corrupted."""

    flows: dict[LinkId, float]
    corrupted: tuple[LinkId, ...] = ()
    name: str | None = None


def _scalar(value: Any) -> str:
    """Canonical single-line YAML rendering of a scalar."""
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    text = yaml.safe_dump(value, default_flow_style=True).strip()
    if text.endswith("\n..."):
        text = text[:-4].strip()
    return text


def _load_yaml(text: str) -> Any:
    try:
        return yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark else None
        raise FormatSyntaxError(f"not valid YAML: {exc.problem}", line) from exc
    except yaml.YAMLError as exc:
        raise FormatSyntaxError(f"not valid YAML: {exc}") from exc


def _require(mapping: Mapping, key: str, kind: type, what: str) -> Any:
    if key not in mapping:
        raise FormatSyntaxError(f"{what} is missing the {key!r} field")
    value = mapping[key]
    if not isinstance(value, kind):
        raise FormatSyntaxError(f"{what} field {key!r} must be a {kind.__name__}")
    return value


def parse_network(text: str) -> NetworkDocument:
    """Parse a network document and check every model invariant.

    Beyond the grammar this validates endpoint references, identifier
    uniqueness, count signs and the incidence-matrix rank, and verifies the
    monitored set contains a base set (raising ``NoBaseSet`` otherwise, a
    distinct condition from a malformed file: the document is well-formed
    but describes an unobservable measurement layout).
    """
    data = _load_yaml(text)
    if not isinstance(data, dict):
        raise FormatSyntaxError("document root must be a mapping")
    fmt = data.get("format")
    if fmt != NETWORK_FORMAT:
        raise FormatSyntaxError(f"unsupported format {fmt!r}, expected {NETWORK_FORMAT!r}")
    name = data.get("name")
    if name is not None and not isinstance(name, str):
        raise FormatSyntaxError("field 'name' must be a string")

    nodes = _require(data, "nodes", list, "network document")
    raw_links = _require(data, "links", list, "network document")
    raw_monitored = _require(data, "monitored", list, "network document")

    if len(set(nodes)) != len(nodes):
        raise DuplicateId("duplicate node identifier in 'nodes'")

    links: list[Link] = []
    seen_links: set[LinkId] = set()
    node_set = set(nodes)
    for entry in raw_links:
        if not isinstance(entry, dict) or "id" not in entry:
            raise FormatSyntaxError(f"malformed link entry: {entry!r}")
        link_id = entry["id"]
        if link_id in seen_links:
            raise DuplicateId(f"duplicate link identifier {link_id!r}")
        seen_links.add(link_id)
        tail, head = entry.get("tail"), entry.get("head")
        for endpoint in (tail, head):
            if endpoint is not None and endpoint not in node_set:
                raise UnknownNode(f"link {link_id!r} references unknown node {endpoint!r}")
        try:
            links.append(Link(id=link_id, tail=tail, head=head))
        except ValueError as exc:
            raise FormatSyntaxError(str(exc)) from exc

    try:
        network = Network(nodes=tuple(nodes), links=tuple(links), name=name)
    except ValueError as exc:
        raise FormatSyntaxError(str(exc)) from exc

    monitored_ids = list(raw_monitored)
    if len(set(monitored_ids)) != len(monitored_ids):
        raise DuplicateId("duplicate link identifier in 'monitored'")
    unknown = [link_id for link_id in monitored_ids if link_id not in seen_links]
    if unknown:
        raise UnknownLink(f"monitored links not declared: {unknown}")
    monitored = network.monitored_set(monitored_ids)

    observation = None
    if data.get("observed") is not None:
        raw_observed = data["observed"]
        if not isinstance(raw_observed, dict):
            raise FormatSyntaxError("field 'observed' must be a mapping of link id to count")
        for link_id, value in raw_observed.items():
            if link_id not in seen_links:
                raise UnknownLink(f"observation for undeclared link {link_id!r}")
            if link_id not in monitored:
                raise UnmonitoredObservation(
                    f"observation for link {link_id!r}, which is not monitored")
            if not isinstance(value, (int, float)) or isinstance(value, bool) \
                    or not math.isfinite(float(value)):
                raise FormatSyntaxError(f"count for link {link_id!r} must be a finite number")
            if float(value) < 0:
                raise NegativeCount(f"count for link {link_id!r} is negative ({value})")
        missing = [link_id for link_id in monitored if link_id not in raw_observed]
        if missing:
            raise MissingObservation(f"monitored links without counts: {missing}")
        observation = FlowObservation({link_id: float(raw_observed[link_id])
                                       for link_id in monitored})

    # Invariant checks that need linear algebra: full row rank, and at least
    # one base set inside the monitored links (observability).
    incidence = build_incidence(network)
    find_base_set(incidence, incidence.columns(monitored))

    return NetworkDocument(network=network, monitored=monitored, observation=observation)


def serialize_network(document: NetworkDocument) -> str:
    """Canonical text of a network document."""
    network = document.network
    out: list[str] = [f"format: {NETWORK_FORMAT}"]
    if network.name is not None:
        out.append(f"name: {_scalar(network.name)}")
    out.append(f"nodes: [{', '.join(_scalar(n) for n in network.nodes)}]")
    out.append("links:")
    for link in network.links:
        out.append(
            f"- {{id: {_scalar(link.id)}, tail: {_scalar(link.tail)}, head: {_scalar(link.head)}}}")
    out.append(f"monitored: [{', '.join(_scalar(i) for i in document.monitored)}]")
    if document.observation is not None:
        out.append("observed:")
        for link_id in document.monitored:
            out.append(f"  {_scalar(link_id)}: {_scalar(document.observation[link_id])}")
    return "\n".join(out) + "\n"


def load_network(path: str | Path) -> NetworkDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise NetworkFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_network(text)


# ---------------------------------------------------------------------------
# Ground-truth sidecars.


def parse_truth(text: str) -> GroundTruth:
    data = _load_yaml(text)
    if not isinstance(data, dict):
        raise FormatSyntaxError("truth document root must be a mapping")
    fmt = data.get("format")
    if fmt != TRUTH_FORMAT:
        raise FormatSyntaxError(f"unsupported format {fmt!r}, expected {TRUTH_FORMAT!r}")
    flows = _require(data, "flows", dict, "truth document")
    parsed: dict[LinkId, float] = {}
    for link_id, value in flows.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool) \
                or not math.isfinite(float(value)):
            raise FormatSyntaxError(f"flow for link {link_id!r} must be a finite number")
        parsed[link_id] = float(value)
    corrupted = data.get("corrupted") or []
    if not isinstance(corrupted, list):
        raise FormatSyntaxError("field 'corrupted' must be a list of link ids")
    name = data.get("name")
    return GroundTruth(flows=parsed, corrupted=tuple(corrupted), name=name)


def serialize_truth(truth: GroundTruth) -> str:
    out = [f"format: {TRUTH_FORMAT}"]
    if truth.name is not None:
        out.append(f"name: {_scalar(truth.name)}")
    out.append("flows:")
    for link_id, value in truth.flows.items():
        out.append(f"  {_scalar(link_id)}: {_scalar(value)}")
    if truth.corrupted:
        out.append(f"corrupted: [{', '.join(_scalar(i) for i in truth.corrupted)}]")
    return "\n".join(out) + "\n"


def load_truth(path: str | Path) -> GroundTruth:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise NetworkFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_truth(text)


# ---------------------------------------------------------------------------
# Machine-readable correction reports.


def report_dict(document: NetworkDocument, result: CorrectionResult) -> dict:
    """JSON-compatible correction report, embedding the source network."""
    network = document.network
    observation = document.observation
    reported = result.reported_flows
    per_link = []
    for i, link in enumerate(network.links):
        monitored = link.id in document.monitored
        observed = observation[link.id] if (monitored and observation) else None
        estimated = float(result.flows[i])
        entry: dict[str, Any] = {
            "id": link.id,
            "monitored": monitored,
            "observed": observed,
            "estimated": estimated,
            "reported": float(reported[i]),
        }
        if observed is not None:
            difference = float(reported[i]) - observed
            entry["difference"] = difference
            entry["percent_difference"] = (
                100.0 * difference / observed if observed != 0 else None)
        else:
            entry["difference"] = None
            entry["percent_difference"] = None
        per_link.append(entry)
    return {
        "format": REPORT_FORMAT,
        "name": network.name,
        "method": result.method,
        "rounded": result.flows_rounded is not None,
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "base_set": list(result.base_set_links),
        "possibly_nonunique": result.possibly_nonunique,
        "max_node_residual": max(abs(v) for v in result.node_residuals.values()),
        "max_node_residual_rounded": (
            None if result.node_residuals_rounded is None
            else max(abs(v) for v in result.node_residuals_rounded.values())),
        "suspects": [{"link": link_id, "residual": residual}
                     for link_id, residual in result.suspects],
        "flagged": list(result.flagged),
        "network": {
            "nodes": list(network.nodes),
            "links": [{"id": link.id, "tail": link.tail, "head": link.head}
                      for link in network.links],
            "monitored": list(document.monitored),
        },
        "links": per_link,
    }


def serialize_report(document: NetworkDocument, result: CorrectionResult) -> str:
    return json.dumps(report_dict(document, result), indent=2) + "\n"


@dataclass(frozen=True)
class LoadedReport:
    """A correction report read back from disk."""

    document: NetworkDocument
    estimates: dict[LinkId, float]
    reported: dict[LinkId, float]
    observed: dict[LinkId, float]
    objective: float
    method: str
    rounded: bool


def parse_report(text: str) -> LoadedReport:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatSyntaxError(f"not valid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(data, dict) or data.get("format") != REPORT_FORMAT:
        raise FormatSyntaxError(f"unsupported report format, expected {REPORT_FORMAT!r}")
    net = _require(data, "network", dict, "report")
    links = [Link(id=e["id"], tail=e.get("tail"), head=e.get("head"))
             for e in _require(net, "links", list, "report network")]
    network = Network(nodes=tuple(_require(net, "nodes", list, "report network")),
                      links=tuple(links), name=data.get("name"))
    monitored = network.monitored_set(_require(net, "monitored", list, "report network"))
    estimates: dict[LinkId, float] = {}
    reported: dict[LinkId, float] = {}
    observed: dict[LinkId, float] = {}
    for entry in _require(data, "links", list, "report"):
        link_id = entry["id"]
        estimates[link_id] = float(entry["estimated"])
        reported[link_id] = float(entry["reported"])
        if entry.get("observed") is not None:
            observed[link_id] = float(entry["observed"])
    observation = FlowObservation(observed) if observed else None
    document = NetworkDocument(network=network, monitored=monitored, observation=observation)
    return LoadedReport(
        document=document,
        estimates=estimates,
        reported=reported,
        observed=observed,
        objective=float(data.get("objective", float("nan"))),
        method=str(data.get("method", "")),
        rounded=bool(data.get("rounded", False)),
    )


def load_report(path: str | Path) -> LoadedReport:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise NetworkFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_report(text)
