"""Recoverability of link subsets and the stability constant.

The recoverability of a subset S of the monitored links M is the smallest
possible ratio ``||h restricted to M\\S||_1 / ||h restricted to S||_1`` over
nonzero kernel directions h.  A value above 1 certifies that arbitrary
miscounts confined to S are corrected exactly by the l1 fit; with small
noise elsewhere the correction error is bounded by the stability constant
times the l1 norm of that noise.

Two routes compute the value: an inverse-power iteration that linearises
the denominator each step (with a ball-constrained ADMM subproblem), and an
exact oracle that enumerates the sign patterns of the denominator and
solves one linear program per pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import linprog

from .correction import shrink
from .errors import (
    DegenerateDirection,
    DegenerateSubset,
    InvalidAlpha,
    NoBaseSet,
    OracleTooLarge,
)
from .kernel import (
    BaseSet,
    KernelBasis,
    find_base_set,
    iter_base_sets,
    kernel_basis,
    operator_one_norm,
    solve_square,
)
from .network import IncidenceMatrix, LinkId, MonitoredSet, Network, build_incidence

#: Denominators below this are treated as zero when evaluating the quotient.
QUOTIENT_TOL = 1e-12

#: Sign-pattern enumeration cap for the exact oracle.
ORACLE_SUBSET_CAP = 12

#: Margin above 1 required before exact recovery is certified; the threshold
#: is sharp, so a value numerically indistinguishable from 1 must not pass.
CERTIFICATION_MARGIN = 1e-6

BasisLike = Union[KernelBasis, np.ndarray]


def _basis_matrix(basis: BasisLike) -> np.ndarray:
    if isinstance(basis, KernelBasis):
        return basis.matrix
    return np.asarray(basis, dtype=float)


def _split_rows(basis: BasisLike, monitored: Iterable[int],
                subset: Iterable[int]) -> tuple[np.ndarray, np.ndarray]:
    matrix = _basis_matrix(basis)
    monitored = sorted(set(int(i) for i in monitored))
    subset = sorted(set(int(i) for i in subset))
    if not subset:
        raise ValueError("subset must be nonempty")
    stray = set(subset) - set(monitored)
    if stray:
        raise ValueError(f"subset rows not monitored: {sorted(stray)}")
    rest = [i for i in monitored if i not in set(subset)]
    return matrix[rest, :], matrix[subset, :]


def recoverability_quotient(basis: BasisLike, monitored: Iterable[int],
                            subset: Iterable[int], direction: np.ndarray) -> float:
    """Evaluate ``||Z_{M\\S} v||_1 / ||Z_S v||_1`` for one direction.

    Scale invariant in ``v``.  Raises ``DegenerateDirection`` when the
    denominator vanishes, where the quotient is undefined.
    """
    rest, sub = _split_rows(basis, monitored, subset)
    direction = np.asarray(direction, dtype=float)
    denominator = float(np.abs(sub @ direction).sum())
    if denominator <= QUOTIENT_TOL:
        raise DegenerateDirection("direction is invisible on the queried subset")
    numerator = float(np.abs(rest @ direction).sum()) if rest.size else 0.0
    return numerator / denominator


@dataclass(frozen=True)
class InversePowerConfig:
    """Settings for the inverse-power iteration and its inner ADMM.

    The outer loop is a local scheme on a nonconvex ratio, so several
    restarts are taken: the canonical coordinate directions with the
    largest subset energy first, then seeded random unit vectors.
    """

    outer_iters: int = 100
    inner_delta: float = 1.0
    inner_iters: int = 2_000
    inner_primal_tol: float = 1e-11
    inner_dual_tol: float = 1e-11
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.outer_iters < 1 or self.inner_iters < 1 or self.restarts < 1:
            raise ValueError("iteration and restart counts must be at least 1")
        if self.inner_delta <= 0:
            raise ValueError("inner_delta must be positive")
        if self.inner_primal_tol <= 0 or self.inner_dual_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class InversePowerResult:
    value: float
    direction: np.ndarray
    trace: tuple[float, ...]
    restarts: int


def _minimize_linearized(rest: np.ndarray, gram_factor, linear: np.ndarray,
                         start: np.ndarray, config: InversePowerConfig) -> np.ndarray:
    """Inner subproblem: ``min ||Z_{M\\S} v||_1 - <linear, v>`` on the unit ball.

    ADMM on the splitting z = Z_{M\\S} v with the Euclidean-ball projection
    applied right after the normal-equation step:

        v <- G^-1 (Z^T (z + u/delta) + linear/delta);  v <- v/||v|| if ||v|| > 1
        z <- shrink(Z v - u/delta, 1/delta)
        u <- u + delta * (z - Z v)

    The projection makes the v-step inexact in general, but the outer loop
    only needs a feasible direction with a non-positive linearised
    objective, which this reliably produces.
    """
    delta = config.inner_delta
    threshold = 1.0 / delta
    v = np.array(start, dtype=float, copy=True)
    z = rest @ v
    u = np.zeros(rest.shape[0])
    scale = 1.0 + float(np.linalg.norm(linear))
    for _ in range(config.inner_iters):
        v = cho_solve(gram_factor, rest.T @ (z + u / delta) + linear / delta)
        norm = float(np.linalg.norm(v))
        if norm > 1.0:
            v = v / norm
        fitted = rest @ v
        z_new = shrink(fitted - u / delta, threshold)
        u = u + delta * (z_new - fitted)
        primal = float(np.linalg.norm(z_new - fitted))
        dual = float(np.linalg.norm(delta * (rest.T @ (z_new - z))))
        z = z_new
        if primal <= config.inner_primal_tol * scale and dual <= config.inner_dual_tol * scale:
            break
    return v


def _null_direction(rest: np.ndarray, sub: np.ndarray, columns: int) -> np.ndarray | None:
    """A unit direction annihilated by the numerator rows but visible to the
    subset rows, when the numerator rows are column-rank deficient."""
    if rest.size == 0:
        kernel = np.eye(columns)
    else:
        _, singular, vt = np.linalg.svd(rest, full_matrices=True)
        tol = max(rest.shape) * np.finfo(float).eps * (singular[0] if singular.size else 0.0)
        rank = int(np.sum(singular > max(tol, QUOTIENT_TOL)))
        if rank == columns:
            return None
        kernel = vt[rank:].T
    projected = sub @ kernel
    _, _, pvt = np.linalg.svd(projected, full_matrices=False)
    direction = kernel @ pvt[0]
    if float(np.abs(sub @ direction).sum()) <= QUOTIENT_TOL:
        return None
    return direction / float(np.linalg.norm(direction))


def recoverability_inverse_power(basis: BasisLike, monitored: Iterable[int],
                                 subset: Iterable[int],
                                 config: InversePowerConfig | None = None
                                 ) -> InversePowerResult:
    """Minimise the recoverability quotient by inverse-power iteration.

    Each outer step linearises the denominator at the current direction and
    solves the resulting ball-constrained problem with the inner ADMM; the
    quotient of the new direction can only improve, so the reported trace is
    non-increasing (a step that fails to improve keeps the previous
    direction).  The minimum over restarts is returned.

    Raises ``DegenerateSubset`` when the subset rows are identically zero,
    in which case the quotient is vacuous (its infimum runs over an empty
    set; by convention the value is infinite).
    """
    config = config or InversePowerConfig()
    rest, sub = _split_rows(basis, monitored, subset)
    columns = _basis_matrix(basis).shape[1]
    if float(np.max(np.abs(sub))) <= QUOTIENT_TOL:
        raise DegenerateSubset("kernel directions cannot reach the queried subset")

    # Rank-deficient numerator rows admit a direction with zero numerator
    # and positive denominator: the infimum is 0 and is attained.
    null = _null_direction(rest, sub, columns)
    if null is not None:
        return InversePowerResult(value=0.0, direction=null, trace=(0.0,), restarts=0)

    gram_factor = cho_factor(rest.T @ rest)
    rng = np.random.default_rng(config.seed)
    energy = np.abs(sub).sum(axis=0)
    starts = [np.eye(columns)[:, j]
              for j in np.argsort(-energy, kind="stable") if energy[j] > QUOTIENT_TOL]
    while len(starts) < config.restarts:
        raw = rng.standard_normal(columns)
        starts.append(raw / float(np.linalg.norm(raw)))

    best_value = math.inf
    best_direction = starts[0]
    best_trace: tuple[float, ...] = ()
    used = 0
    for start in starts[:config.restarts]:
        used += 1
        v = start / float(np.linalg.norm(start))
        denominator = float(np.abs(sub @ v).sum())
        if denominator <= QUOTIENT_TOL:
            continue
        value = float(np.abs(rest @ v).sum()) / denominator
        trace = [value]
        stalled = 0
        for _ in range(config.outer_iters):
            signs = np.sign(sub @ v)
            linear = value * (sub.T @ signs)
            candidate = _minimize_linearized(rest, gram_factor, linear, v, config)
            cand_denominator = float(np.abs(sub @ candidate).sum())
            if cand_denominator <= QUOTIENT_TOL:
                stalled += 1
            else:
                cand_value = float(np.abs(rest @ candidate).sum()) / cand_denominator
                if cand_value < value:
                    if value - cand_value < 1e-12 * (1.0 + value):
                        stalled += 1
                    else:
                        stalled = 0
                    v, value = candidate, cand_value
                else:
                    stalled += 1
            trace.append(value)
            if stalled >= 3:
                break
        if value < best_value:
            best_value = value
            best_direction = v
            best_trace = tuple(trace)
    return InversePowerResult(value=best_value, direction=best_direction,
                              trace=best_trace, restarts=used)


def recoverability_exact(basis: BasisLike, monitored: Iterable[int],
                         subset: Iterable[int], *,
                         subset_cap: int = ORACLE_SUBSET_CAP) -> float:
    """Exact recoverability by sign-pattern enumeration.

    The quotient is scale invariant, so the denominator can be normalised
    to 1; every optimal direction induces some sign pattern on the subset
    rows, so minimising the numerator under each pattern's sign constraints
    (one LP per pattern, halved by the v -> -v symmetry) and taking the
    minimum over feasible patterns is exact.  All patterns infeasible means
    no direction reaches the subset; the value is then infinite.
    """
    rest, sub = _split_rows(basis, monitored, subset)
    s = sub.shape[0]
    if s > subset_cap:
        raise OracleTooLarge(f"subset of size {s} exceeds the oracle cap of {subset_cap}")
    k = sub.shape[1]
    m = rest.shape[0]

    cost = np.concatenate([np.zeros(k), np.ones(m)])
    eye = np.eye(m)
    block = np.block([[rest, -eye], [-rest, -eye]]) if m else np.zeros((0, k + m))
    bounds = [(None, None)] * k + [(0, None)] * m

    best = math.inf
    for bits in product((1.0, -1.0), repeat=s - 1):
        signs = np.array((1.0,) + bits)
        signed_rows = signs[:, None] * sub
        a_ub = np.vstack([block, np.hstack([-signed_rows, np.zeros((s, m))])])
        b_ub = np.zeros(2 * m + s)
        a_eq = np.concatenate([signs @ sub, np.zeros(m)])[None, :]
        result = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                         bounds=bounds, method="highs")
        if result.status == 2:  # this sign pattern is infeasible
            continue
        if result.status != 0:
            raise RuntimeError(f"recoverability oracle failed: {result.message}")
        best = min(best, float(result.fun))
    return best


@dataclass(frozen=True)
class StabilityBound:
    """Stability constant with the base set that minimises it."""

    value: float
    base_set: BaseSet
    examined: int
    truncated: bool


def stability_constant(incidence: IncidenceMatrix | np.ndarray,
                       monitored: Iterable[int], alpha: float,
                       limit: int = 10_000) -> StabilityBound:
    """Error-amplification constant for a given recoverability value.

    Computes ``2(alpha+1)/(alpha-1) * min(||inv(A_c) A_b||_1 + 1)`` where
    the minimum runs over base sets inside the monitored links (columns b)
    with complement columns c, enumerated lexicographically up to ``limit``.
    Truncation keeps the bound valid, only possibly loose, because the
    minimum is then taken over fewer base sets; the flag reports it.
    """
    if not alpha > 1:
        raise InvalidAlpha(f"stability bound needs a recoverability value > 1, got {alpha}")
    if limit < 1:
        raise ValueError("limit must be at least 1")
    entries = incidence.entries if isinstance(incidence, IncidenceMatrix) else np.asarray(incidence, dtype=float)
    factor = 2.0 if math.isinf(alpha) else 2.0 * (alpha + 1.0) / (alpha - 1.0)

    best = math.inf
    best_set: BaseSet | None = None
    examined = 0
    truncated = False
    for base in iter_base_sets(entries, monitored):
        if examined == limit:
            truncated = True
            break
        examined += 1
        solved = solve_square(entries[:, list(base.complement)], entries[:, list(base.links)])
        amplification = operator_one_norm(solved.matrix) + 1.0
        if amplification < best:
            best = amplification
            best_set = base
    if best_set is None:
        raise NoBaseSet("no base set exists within the monitored links")
    return StabilityBound(value=factor * best, base_set=best_set,
                          examined=examined, truncated=truncated)


@dataclass(frozen=True)
class RecoverabilityReport:
    """Certification outcome for one monitored subset."""

    subset: tuple[LinkId, ...]
    value: float
    method: str
    certified_exact_recovery: bool
    inverse_power_value: float | None = None
    oracle_value: float | None = None
    stability: StabilityBound | None = None
    stability_base_links: tuple[LinkId, ...] | None = None
    trace_length: int = 0
    vacuous: bool = False

    @property
    def lambda_value(self) -> float | None:
        return None if self.stability is None else self.stability.value

    @property
    def bound_base_sets_examined(self) -> int:
        return 0 if self.stability is None else self.stability.examined

    @property
    def truncated(self) -> bool:
        return False if self.stability is None else self.stability.truncated


def certify(network: Network, monitored: MonitoredSet | Iterable[LinkId],
            subset: Iterable[LinkId], config: InversePowerConfig | None = None, *,
            oracle: str = "auto", lambda_limit: int = 10_000,
            subset_cap: int = ORACLE_SUBSET_CAP) -> RecoverabilityReport:
    """Compute and certify the recoverability of a subset of monitored links.

    The inverse-power value is always computed; when the subset is within
    the oracle cap (and ``oracle`` is "auto" or "always") the exact oracle
    runs too and its value is the one reported.  Exact recovery is certified
    when the value clears 1 by the certification margin, and the stability
    constant is attached in that case.

    ``oracle``: "auto" runs the oracle when the subset is small enough,
    "always" insists on it (raising ``OracleTooLarge`` otherwise), "never"
    reports the inverse-power value alone.
    """
    if oracle not in ("auto", "always", "never"):
        raise ValueError(f"unknown oracle mode {oracle!r}")
    if not isinstance(monitored, MonitoredSet):
        monitored = network.monitored_set(monitored)
    subset_ids = tuple(subset)
    stray = [link_id for link_id in subset_ids if link_id not in monitored]
    if stray:
        raise ValueError(f"subset links are not monitored: {stray}")
    if not subset_ids:
        raise ValueError("subset must be nonempty")

    incidence = build_incidence(network)
    monitored_cols = incidence.columns(monitored)
    subset_cols = incidence.columns(subset_ids)
    base = find_base_set(incidence, monitored_cols)
    basis = kernel_basis(incidence, base)

    ip_value: float | None = None
    trace_length = 0
    vacuous = False
    try:
        ip = recoverability_inverse_power(basis, monitored_cols, subset_cols, config)
        ip_value = ip.value
        trace_length = len(ip.trace)
    except DegenerateSubset:
        vacuous = True

    oracle_value: float | None = None
    if not vacuous and oracle != "never":
        if len(subset_cols) <= subset_cap:
            oracle_value = recoverability_exact(basis, monitored_cols, subset_cols,
                                                subset_cap=subset_cap)
        elif oracle == "always":
            raise OracleTooLarge(
                f"subset of size {len(subset_cols)} exceeds the oracle cap of {subset_cap}")

    if vacuous:
        value, method = math.inf, "degenerate-subset"
    elif oracle_value is not None:
        value, method = oracle_value, "exact-oracle"
    else:
        value, method = float(ip_value), "inverse-power"

    certified = bool(value > 1.0 + CERTIFICATION_MARGIN)
    stability: StabilityBound | None = None
    stability_links: tuple[LinkId, ...] | None = None
    if certified:
        stability = stability_constant(incidence, monitored_cols, value, limit=lambda_limit)
        stability_links = tuple(incidence.link_ids[j] for j in stability.base_set.links)

    return RecoverabilityReport(
        subset=subset_ids,
        value=value,
        method=method,
        certified_exact_recovery=certified,
        inverse_power_value=ip_value,
        oracle_value=oracle_value,
        stability=stability,
        stability_base_links=stability_links,
        trace_length=trace_length,
        vacuous=vacuous,
    )
