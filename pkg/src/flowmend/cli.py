"""Command-line front end.

Subcommands::

    correct         fit observed counts and report corrected link flows
    recoverability  certify a monitored subset and bound the correction error
    generate        emit a synthetic corrupted instance plus truth sidecar
    validate        score a correction report against a ground-truth sidecar

Exit codes: 0 success, 2 no base set inside the monitored links
(unobservable problem), 3 unreadable or invalid input file, 4 degenerate
recoverability subset, 1 any other failure.  All behaviour is controlled by
flags; no environment variables are consulted.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .correction import AdmmConfig, correct_flows
from .errors import (
    DegenerateNetwork,
    DegenerateSubset,
    FlowmendError,
    MissingGroundTruth,
    NetworkFormatError,
    NoBaseSet,
    RankDeficient,
)
from .fileformat import (
    GroundTruth,
    NetworkDocument,
    load_report,
    load_truth,
    parse_network,
    report_dict,
    serialize_network,
    serialize_report,
    serialize_truth,
)
from .fixtures import bundled_text
from .network import LinkId
from .recoverability import InversePowerConfig, certify, stability_constant
from .synth import SyntheticSpec, generate


def _read_document(spec: str) -> NetworkDocument:
    """Resolve an input argument: a path, a path missing its .yaml suffix,
    or the stem of a bundled fixture file."""
    path = Path(spec)
    if path.is_file():
        return parse_network(path.read_text())
    with_suffix = Path(str(spec) + ".yaml")
    if with_suffix.is_file():
        return parse_network(with_suffix.read_text())
    stem = path.name.removesuffix(".yaml")
    text = bundled_text(stem + ".yaml")
    if text is not None:
        return parse_network(text)
    raise NetworkFormatError(f"no such network file or bundled fixture: {spec}")


def _parse_link_ids(raw: str) -> list[LinkId]:
    ids: list[LinkId] = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            ids.append(int(token))
        except ValueError:
            ids.append(token)
    return ids


def _fmt(value: float | None, decimals: int = 1) -> str:
    if value is None:
        return "N/A"
    if float(value).is_integer():
        return str(int(value))
    return f"{value:.{decimals}f}"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# correct


def _correction_table(document: NetworkDocument, result) -> str:
    observation = document.observation
    rows = [("Link", "Observation", "Estimation", "Difference", "Percentage Difference")]
    reported = result.reported_flows
    for i, link in enumerate(document.network.links):
        observed = observation[link.id] if link.id in document.monitored else None
        estimate = float(reported[i])
        if observed is None:
            rows.append((str(link.id), "N/A", _fmt(estimate), "N/A", "N/A"))
        else:
            difference = estimate - observed
            pct = "N/A" if observed == 0 else f"{100.0 * difference / observed:.1f}%"
            rows.append((str(link.id), _fmt(observed), _fmt(estimate),
                         _fmt(difference), pct))
    widths = [max(len(row[c]) for row in rows) for c in range(5)]
    lines = ["  ".join(cell.rjust(widths[c]) for c, cell in enumerate(row)) for row in rows]
    lines.append("")
    lines.append(f"method: {result.method}  objective: {_fmt(result.objective, 6)}  "
                 f"iterations: {result.iterations}  converged: {'yes' if result.converged else 'NO'}")
    lines.append("base set: " + ", ".join(str(i) for i in result.base_set_links))
    max_node = max(abs(v) for v in result.node_residuals.values())
    note = f"max node residual: {max_node:.3e}"
    if result.node_residuals_rounded is not None:
        max_rounded = max(abs(v) for v in result.node_residuals_rounded.values())
        note += f" (rounded copy: {_fmt(max_rounded)})"
    lines.append(note)
    if result.flagged:
        lines.append("suspect links: " + ", ".join(
            f"{link_id} ({result.residuals[link_id]:+.1f})" for link_id in result.flagged))
    else:
        lines.append("suspect links: none flagged")
    return "\n".join(lines) + "\n"


def _cmd_correct(args: argparse.Namespace) -> int:
    document = _read_document(args.input)
    if document.observation is None:
        raise NetworkFormatError(f"{args.input}: no observed counts; nothing to correct")
    config = AdmmConfig(delta=args.delta, max_iters=args.max_iters,
                        primal_tol=args.tol, dual_tol=args.tol)
    rounding = "auto" if args.round is None else ("always" if args.round else "never")
    result = correct_flows(document.network, document.monitored, document.observation,
                           config, method="exact" if args.oracle else "admm",
                           rounding=rounding, check_ties=args.check_ties)
    if not result.converged:
        print("warning: iteration cap reached before tolerances; reporting best iterate",
              file=sys.stderr)
    if args.format == "machine-readable":
        _emit(serialize_report(document, result), args.output)
    else:
        _emit(_correction_table(document, result), args.output)
    return 0


# ---------------------------------------------------------------------------
# recoverability


def _recoverability_text(report) -> str:
    lines = [f"subset: {', '.join(str(i) for i in report.subset)}"]
    value = "inf" if math.isinf(report.value) else f"{report.value:.9g}"
    lines.append(f"recoverability: {value}")
    lines.append(f"method: {report.method}")
    if report.inverse_power_value is not None and report.method != "inverse-power":
        lines.append(f"inverse-power value: {report.inverse_power_value:.9g} "
                     f"(trace length {report.trace_length})")
    if report.vacuous:
        lines.append("certified exact recovery: yes (vacuously: no kernel direction "
                     "reaches the subset)")
    else:
        lines.append("certified exact recovery: "
                     + ("yes" if report.certified_exact_recovery else "no"))
    if report.stability is not None:
        lines.append(f"stability constant: {report.stability.value:.9g}")
        lines.append("minimizing base set: "
                     + ", ".join(str(i) for i in report.stability_base_links))
        suffix = "truncated enumeration; bound still valid, possibly loose" \
            if report.stability.truncated else "complete enumeration"
        lines.append(f"base sets examined: {report.stability.examined} ({suffix})")
    return "\n".join(lines) + "\n"


def _recoverability_json(report) -> str:
    payload = {
        "subset": list(report.subset),
        "value": None if math.isinf(report.value) else report.value,
        "value_is_infinite": math.isinf(report.value),
        "method": report.method,
        "certified_exact_recovery": report.certified_exact_recovery,
        "vacuous": report.vacuous,
        "inverse_power_value": report.inverse_power_value,
        "oracle_value": report.oracle_value,
        "trace_length": report.trace_length,
        "stability_constant": report.lambda_value,
        "stability_base_set": (None if report.stability_base_links is None
                               else list(report.stability_base_links)),
        "base_sets_examined": report.bound_base_sets_examined,
        "truncated": report.truncated,
    }
    return json.dumps(payload, indent=2) + "\n"


def _cmd_recoverability(args: argparse.Namespace) -> int:
    document = _read_document(args.input)
    subset = _parse_link_ids(args.subset)
    config = InversePowerConfig(restarts=args.restarts, seed=args.seed)
    report = certify(document.network, document.monitored, subset, config,
                     oracle="always" if args.oracle else "auto",
                     lambda_limit=args.lambda_limit)
    text = _recoverability_json(report) if args.format == "machine-readable" \
        else _recoverability_text(report)
    _emit(text, args.output)
    return 4 if report.vacuous else 0


# ---------------------------------------------------------------------------
# generate


def _cmd_generate(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        node_count=args.nodes,
        link_count=args.links,
        monitored_fraction=args.monitored_fraction,
        corrupt_count=args.corrupt,
        corruption_magnitude_range=(args.magnitude[0], args.magnitude[1]),
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    instance = generate(spec)
    network_path = Path(args.output + ".yaml")
    truth_path = Path(args.output + ".truth.yaml")
    network_path.write_text(serialize_network(instance.document))
    truth_path.write_text(serialize_truth(instance.truth))
    print(f"wrote {network_path} and {truth_path}")
    return 0


# ---------------------------------------------------------------------------
# validate


def _cmd_validate(args: argparse.Namespace) -> int:
    report = load_report(args.report)
    truth = load_truth(args.truth)
    document = report.document
    link_ids = [link.id for link in document.network.links]
    missing = [link_id for link_id in link_ids if link_id not in truth.flows]
    if missing:
        raise MissingGroundTruth(f"truth sidecar lacks flows for links: {missing}")

    errors = {link_id: report.reported[link_id] - truth.flows[link_id]
              for link_id in link_ids}
    total = sum(abs(v) for v in errors.values())

    subset = _parse_link_ids(args.subset) if args.subset else list(truth.corrupted)
    lines = ["Link  Estimation  Ground-truth  Error"]
    for link_id in link_ids:
        lines.append(f"{link_id!s:>4}  {_fmt(report.reported[link_id]):>10}  "
                     f"{_fmt(truth.flows[link_id]):>12}  {_fmt(errors[link_id]):>6}")
    lines.append("")
    lines.append(f"l1 estimation error: {_fmt(total, 6)}")

    if subset:
        off_subset = [link_id for link_id in document.monitored if link_id not in subset]
        noise = sum(abs(report.observed[link_id] - truth.flows[link_id])
                    for link_id in off_subset)
        lines.append(f"corrupted subset: {', '.join(str(i) for i in subset)}")
        lines.append(f"off-subset noise l1: {_fmt(noise, 6)}")
        rec = certify(document.network, document.monitored, subset)
        if rec.certified_exact_recovery and rec.stability is not None:
            bound = rec.stability.value * noise
            holds = total <= bound + 1e-6
            lines.append(f"recoverability: {rec.value:.9g} -> stability bound "
                         f"{_fmt(bound, 6)} ({'holds' if holds else 'VIOLATED'})")
        else:
            value = "inf" if math.isinf(rec.value) else f"{rec.value:.9g}"
            lines.append(f"recoverability: {value} -> no error bound available")
    _emit("\n".join(lines) + "\n", args.output)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowmend",
        description="Correct inconsistent link counts on a road network and "
                    "certify which links tolerate miscounts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="fit observed counts and report corrected flows")
    p.add_argument("input", help="network file, or the name of a bundled fixture")
    p.add_argument("--delta", type=float, default=0.1,
                   help="ADMM penalty weight (shrink threshold is 1/delta)")
    p.add_argument("--max-iters", type=int, default=50_000, help="iteration cap")
    p.add_argument("--tol", type=float, default=1e-9,
                   help="relative primal/dual stopping tolerance")
    p.add_argument("--round", action=argparse.BooleanOptionalAction, default=None,
                   help="force (or forbid) integer rounding of the reported flows; "
                        "default rounds when all observed counts are integers")
    p.add_argument("--oracle", action="store_true",
                   help="solve the fit with the exact LP solver instead of ADMM")
    p.add_argument("--check-ties", action="store_true",
                   help="probe the optimal face and record whether the fit was tied")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("table", "machine-readable"), default="table")
    p.set_defaults(func=_cmd_correct)

    p = sub.add_parser("recoverability", help="certify a subset of monitored links")
    p.add_argument("input", help="network file, or the name of a bundled fixture")
    p.add_argument("--subset", required=True,
                   help="comma-separated link ids whose sensors are in question")
    p.add_argument("--restarts", type=int, default=8,
                   help="inverse-power restarts (canonical directions first)")
    p.add_argument("--seed", type=int, default=0, help="seed for random restarts")
    p.add_argument("--oracle", action="store_true",
                   help="require the exact sign-pattern oracle (error if too large)")
    p.add_argument("--lambda-limit", type=int, default=10_000,
                   help="base-set enumeration cap for the stability constant")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("table", "machine-readable"), default="table")
    p.set_defaults(func=_cmd_recoverability)

    p = sub.add_parser("generate", help="emit a synthetic corrupted instance")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--links", type=int, required=True)
    p.add_argument("--monitored-fraction", type=float, default=1.0)
    p.add_argument("--corrupt", type=int, default=0,
                   help="number of severely corrupted sensors")
    p.add_argument("--magnitude", type=int, nargs=2, default=(10_000, 100_000),
                   metavar=("LOW", "HIGH"), help="corruption magnitude range")
    p.add_argument("--noise-sigma", type=float, default=0.0,
                   help="standard deviation of rounded Gaussian noise on the rest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True,
                   help="path prefix; writes PREFIX.yaml and PREFIX.truth.yaml")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("validate", help="score a correction report against ground truth")
    p.add_argument("report", help="machine-readable correction report (JSON)")
    p.add_argument("--truth", required=True, help="ground-truth sidecar (YAML)")
    p.add_argument("--subset", help="corrupted links for the bound check "
                                    "(defaults to the sidecar's corrupted list)")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoBaseSet as exc:
        print(f"error: {exc}\nthe monitored links cannot determine the remaining "
              "flows; the problem is unsolvable as posed", file=sys.stderr)
        return 2
    except (NetworkFormatError, DegenerateNetwork, RankDeficient,
            MissingGroundTruth) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DegenerateSubset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except FlowmendError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
