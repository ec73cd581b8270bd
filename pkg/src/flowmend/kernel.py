"""Base sets and kernel bases of the conservation operator.

A base set is a set of ``l - n`` links whose complement columns form an
invertible square matrix: fixing the flows on the base set determines every
other flow through the conservation equations.  Stacking an identity over
the solved complement rows yields an explicit basis of the kernel of the
incidence matrix; every conservation-consistent flow is a combination of
its columns.

All functions are pure and operate on immutable inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Iterable, Iterator, Union

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import NoBaseSet, SingularComplement, SingularMatrix
from .network import IncidenceMatrix

#: Invertibility tolerance for complement pivots.  Incidence submatrices
#: have integer determinants, so true pivots are well separated from zero.
BASESET_PIVOT_TOL = 1e-9

#: Pivot tolerance for general square solves.
SOLVE_PIVOT_TOL = 1e-12

MatrixLike = Union[IncidenceMatrix, np.ndarray]


def _entries(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, IncidenceMatrix):
        return matrix.entries
    return np.asarray(matrix, dtype=float)


@dataclass(frozen=True)
class BaseSet:
    """A base set as 0-based column indices.

    ``links`` are the free flows (size ``l - n``); ``complement`` are the
    determined ones, whose columns form an invertible square matrix.
    """

    links: tuple[int, ...]
    complement: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(sorted(self.links)))
        object.__setattr__(self, "complement", tuple(sorted(self.complement)))
        overlap = set(self.links) & set(self.complement)
        if overlap:
            raise ValueError(f"base set and complement overlap: {sorted(overlap)}")


@dataclass(frozen=True)
class KernelBasis:
    """An explicit kernel basis tied to the base set that produced it.

    Rows indexed by ``base_set.links`` form an exact identity; the remaining
    rows carry the solved complement coefficients.
    """

    matrix: np.ndarray
    base_set: BaseSet


def _greedy_pivot_columns(entries: np.ndarray, order: Iterable[int],
                          tol: float = BASESET_PIVOT_TOL) -> list[int]:
    """Select a maximal independent column set greedily along ``order``.

    Standard Gaussian column elimination: once a column is accepted as a
    pivot, its pivot row is eliminated from all other columns, so a later
    column is accepted iff it is independent of the columns chosen so far.
    """
    work = np.array(entries, dtype=float, copy=True)
    n = work.shape[0]
    row_free = np.ones(n, dtype=bool)
    pivots: list[int] = []
    for j in order:
        if len(pivots) == n:
            break
        col = np.where(row_free, np.abs(work[:, j]), 0.0)
        i = int(np.argmax(col))
        if col[i] <= tol:
            continue
        pivots.append(j)
        row_free[i] = False
        scale = work[i, :] / work[i, j]
        scale[j] = 0.0
        work -= np.outer(work[:, j], scale)
    return pivots


def find_base_set(incidence: MatrixLike, candidates: Iterable[int]) -> BaseSet:
    """Find a base set contained in ``candidates`` (0-based column indices).

    Deterministic greedy pivoting: complement pivots are drawn from the
    non-candidate columns first (forcing them out of the returned set), then
    from candidates in ascending column order.  By the matroid exchange
    property this finds a base set inside ``candidates`` whenever one
    exists; otherwise ``NoBaseSet`` is raised, which means the candidate
    flows cannot determine the full network and the problem is
    unobservable.
    """
    entries = _entries(incidence)
    n, l = entries.shape
    candidate_set = set(int(j) for j in candidates)
    bad = [j for j in candidate_set if not 0 <= j < l]
    if bad:
        raise ValueError(f"candidate column indices out of range: {sorted(bad)}")
    if len(candidate_set) < l - n:
        raise NoBaseSet(
            f"need {l - n} candidate links for a base set, only {len(candidate_set)} given"
        )
    order = sorted(set(range(l)) - candidate_set) + sorted(candidate_set)
    pivots = _greedy_pivot_columns(entries, order)
    if len(pivots) < n:
        raise NoBaseSet("incidence matrix is rank deficient; no invertible complement exists")
    complement = set(pivots)
    base = sorted(set(range(l)) - complement)
    outside = [j for j in base if j not in candidate_set]
    if outside:
        raise NoBaseSet(
            f"no base set lies inside the candidate links; columns {outside} cannot be avoided"
        )
    return BaseSet(links=tuple(base), complement=tuple(sorted(complement)))


def _complement_invertible(entries: np.ndarray, complement: tuple[int, ...],
                           tol: float = BASESET_PIVOT_TOL) -> bool:
    sub = entries[:, list(complement)]
    with warnings.catch_warnings():
        # Singular complements are an expected outcome here, not a problem.
        warnings.simplefilter("ignore", LinAlgWarning)
        try:
            lu, _ = lu_factor(sub, check_finite=False)
        except Exception:
            return False
    return bool(np.min(np.abs(np.diag(lu))) > tol)


def iter_base_sets(incidence: MatrixLike, candidates: Iterable[int]) -> Iterator[BaseSet]:
    """Yield every base set inside ``candidates`` in lexicographic order."""
    entries = _entries(incidence)
    n, l = entries.shape
    candidate_list = sorted(set(int(j) for j in candidates))
    all_columns = set(range(l))
    for combo in combinations(candidate_list, l - n):
        complement = tuple(sorted(all_columns - set(combo)))
        if _complement_invertible(entries, complement):
            yield BaseSet(links=combo, complement=complement)


def enumerate_base_sets(incidence: MatrixLike, candidates: Iterable[int],
                        limit: int = 10_000) -> list[BaseSet]:
    """All base sets inside ``candidates``, truncated at ``limit``.

    The count is combinatorial; callers that minimise over the result must
    treat a truncated list as yielding a valid but possibly loose bound.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    found = list(islice(iter_base_sets(incidence, candidates), limit))
    if not found:
        raise NoBaseSet("no base set exists within the candidate links")
    return found


def kernel_basis(incidence: MatrixLike, base_set: BaseSet) -> KernelBasis:
    """Construct the kernel basis associated with a base set.

    Rows indexed by the base set (in ascending order) are set to an exact
    identity; rows indexed by the complement are obtained from an LU solve
    against the complement columns (no explicit inverse is ever formed).
    """
    entries = _entries(incidence)
    n, l = entries.shape
    base = list(base_set.links)
    complement = list(base_set.complement)
    if sorted(base + complement) != list(range(l)):
        raise ValueError("base set and complement do not partition the link columns")
    sub = entries[:, complement]
    lu, piv = lu_factor(sub)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest <= BASESET_PIVOT_TOL:
        raise SingularComplement(
            f"complement columns are singular to tolerance (pivot {smallest:.3e})"
        )
    solved = lu_solve((lu, piv), entries[:, base])
    basis = np.zeros((l, l - n))
    for j, k in enumerate(base):
        basis[k, j] = 1.0
    basis[complement, :] = -solved
    residual = float(np.max(np.abs(entries @ basis))) if basis.size else 0.0
    if residual > 1e-10:
        raise SingularComplement(
            f"kernel construction failed: conservation residual {residual:.3e}"
        )
    basis.setflags(write=False)
    return KernelBasis(matrix=basis, base_set=base_set)


@dataclass(frozen=True)
class SquareSolution:
    """Solution of a square linear system with its achieved residual."""

    matrix: np.ndarray
    residual: float


def solve_square(square: np.ndarray, rhs: np.ndarray) -> SquareSolution:
    """Solve ``square @ X = rhs`` by LU with partial pivoting.

    Reports the max-norm residual of the computed solution.  Raises
    ``SingularMatrix`` when a pivot falls below tolerance.
    """
    square = np.asarray(square, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if square.ndim != 2 or square.shape[0] != square.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {square.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)  # singularity raised below
        lu, piv = lu_factor(square)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if smallest <= SOLVE_PIVOT_TOL:
        raise SingularMatrix(smallest)
    solution = lu_solve((lu, piv), rhs)
    residual = float(np.max(np.abs(square @ solution - rhs)))
    return SquareSolution(matrix=solution, residual=residual)


def operator_one_norm(matrix: np.ndarray) -> float:
    """Operator norm induced by the l1 vector norm: max absolute column sum."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(matrix).sum(axis=0)))
