"""Crossbar matchings: clearance schedules, max-weight matching and Birkhoff-von Neumann decomposition"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from src.switch.lib.traffic import as_traffic_matrix, clearance_time

IDLE = -1
BVN_TOL = 1e-12


@dataclass(eq=False)
class Matching:
    """
    One crossbar configuration: input i sends to output assign[i], or idles when assign[i] == IDLE.
    """

    assign: np.ndarray

    def __post_init__(self):
        self.assign = np.asarray(self.assign, dtype=np.int64)

    @classmethod
    def idle(cls, n: int) -> "Matching":
        return cls(np.full(n, IDLE, dtype=np.int64))

    @classmethod
    def identity(cls, n: int) -> "Matching":
        return cls(np.arange(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.assign.shape[0]

    def pairs(self) -> List[Tuple[int, int]]:
        """Active (input, output) pairs"""
        return [(int(i), int(j)) for i, j in enumerate(self.assign) if j != IDLE]

    def to_matrix(self) -> np.ndarray:
        """0/1 permutation (sub)matrix"""
        matrix = np.zeros((self.n, self.n), dtype=np.int64)
        active = self.assign != IDLE
        matrix[np.nonzero(active)[0], self.assign[active]] = 1
        return matrix

    def __eq__(self, other) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return np.array_equal(self.assign, other.assign)

    def __repr__(self) -> str:
        return f"Matching({self.assign.tolist()})"


def is_feasible(matching: Matching) -> bool:
    """True iff every output is used by at most one input and every target is a real port"""
    assign = matching.assign
    if ((assign < IDLE) | (assign >= matching.n)).any():
        return False
    active = assign[assign != IDLE]
    return np.unique(active).size == active.size


@dataclass
class ClearanceSchedule:
    """Ordered matchings that together clear `covers`; one matching per slot"""

    covers: np.ndarray
    matchings: List[Matching] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.matchings)

    def service_counts(self) -> np.ndarray:
        """How often each (i, j) is activated over the whole schedule"""
        counts = np.zeros_like(self.covers)
        for matching in self.matchings:
            counts += matching.to_matrix()
        return counts


def pad_to_line_sums(x: np.ndarray, target) -> np.ndarray:
    """
    Adds non-negative mass to `x` until every row and column sums to `target`.

    Fills row-major, giving each entry the smaller of its row and column
    deficiency. Requires every line sum of `x` to be at most `target`.
    """
    padded = np.array(x, dtype=float if isinstance(target, float) else np.int64)
    row_def = target - padded.sum(axis=1)
    col_def = target - padded.sum(axis=0)
    n = padded.shape[0]
    for i in range(n):
        if row_def[i] <= 0:
            continue
        for j in range(n):
            add = min(row_def[i], col_def[j])
            if add > 0:
                padded[i, j] += add
                row_def[i] -= add
                col_def[j] -= add
            if row_def[i] <= 0:
                break
    return padded


def perfect_matching(support: np.ndarray) -> np.ndarray:
    """
    Perfect matching on the positive entries of `support` via Hopcroft-Karp.

    Returns:
        np.ndarray: Column matched to each row, with IDLE for unmatched rows.
    """
    graph = csr_matrix((support > 0).astype(np.int8))
    return np.asarray(maximum_bipartite_matching(graph, perm_type="column"), dtype=np.int64)


def clearance_schedule(x) -> ClearanceSchedule:
    """
    Builds exactly clearance_time(x) matchings whose restriction to x's entries clears x.

    The matrix is padded to constant line sums, split into weighted perfect
    matchings, and each slot serves a real packet of (i, j) while x still has
    one there, idling otherwise.

    Args:
        x: Square non-negative integer traffic matrix.

    Returns:
        ClearanceSchedule: schedule of length clearance_time(x).
    """
    x = as_traffic_matrix(x)
    n = x.shape[0]
    tau = clearance_time(x)
    schedule = ClearanceSchedule(covers=x.copy())
    if tau == 0:
        return schedule

    residual = pad_to_line_sums(x, tau)
    real_left = x.copy()
    rows = np.arange(n)
    while residual.any():
        perm = perfect_matching(residual)
        if (perm == IDLE).any():
            # Every integer matrix with equal line sums has a perfect matching on its support
            raise RuntimeError("Padded matrix lost its perfect matching")
        multiplicity = int(residual[rows, perm].min())
        residual[rows, perm] -= multiplicity
        for _ in range(multiplicity):
            real = real_left[rows, perm] > 0
            schedule.matchings.append(Matching(np.where(real, perm, IDLE)))
            real_left[rows[real], perm[real]] -= 1
    return schedule


def _tight_edges(weights: np.ndarray, assign: np.ndarray) -> np.ndarray:
    """
    Edges of the equality subgraph of an optimal dual for the assignment `assign`.

    Dual potentials come from shortest paths over the "row i takes row k's
    column" exchange graph, which has no negative cycle when `assign` is optimal.
    """
    n = weights.shape[0]
    cost = -weights
    matched = cost[np.arange(n), assign]
    exchange = cost[:, assign] - matched[None, :]
    dist = np.zeros(n)
    for _ in range(n):
        relaxed = np.minimum(dist, (dist[:, None] + exchange).min(axis=0))
        if np.array_equal(relaxed, dist):
            break
        dist = relaxed
    u = -dist
    v = np.empty(n)
    v[assign] = matched + dist
    scale = max(1.0, float(np.abs(weights).max()))
    tight = (cost - u[:, None] - v[None, :]) <= 1e-9 * scale
    tight[np.arange(n), assign] = True
    return tight


def _lexicographic_optimum(tight: np.ndarray, assign: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching of the tight-edge graph, starting from `assign`"""
    n = tight.shape[0]
    assign = assign.copy()
    col_owner = np.empty(n, dtype=np.int64)
    col_owner[assign] = np.arange(n)

    def reroute(row: int, target: int, banned: np.ndarray, visited: np.ndarray) -> bool:
        # alternating path from `row` ending at column `target`
        for col in np.nonzero(tight[row] & ~banned & ~visited)[0]:
            if visited[col]:
                continue
            visited[col] = True
            if col == target or reroute(int(col_owner[col]), target, banned, visited):
                assign[row] = col
                col_owner[col] = row
                return True
        return False

    for i in range(n):
        for j in np.nonzero(tight[i])[0]:
            if j == assign[i]:
                break
            if col_owner[j] < i:
                continue
            banned = np.zeros(n, dtype=bool)
            banned[assign[:i]] = True
            banned[j] = True
            displaced = int(col_owner[j])
            freed = int(assign[i])
            if reroute(displaced, freed, banned, np.zeros(n, dtype=bool)):
                assign[i] = j
                col_owner[j] = i
                break
    return assign


def max_weight_matching(weights) -> Matching:
    """
    Full matching maximizing the total weight of matched pairs.

    Ties between optimal matchings are broken toward the lexicographically
    smallest output vector, so an all-zero matrix gives the identity.

    Args:
        weights: Square real matrix, typically VOQ lengths.

    Returns:
        Matching: A full permutation.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ValueError(f"Weight matrix must be square, got shape {weights.shape}")
    if weights.shape[0] == 0:
        return Matching(np.empty(0, dtype=np.int64))
    _, assign = linear_sum_assignment(weights, maximize=True)
    assign = np.asarray(assign, dtype=np.int64)
    return Matching(_lexicographic_optimum(_tight_edges(weights, assign), assign))


def bvn_decompose(rate) -> List[Tuple[float, Matching]]:
    """
    Birkhoff-von Neumann decomposition of a doubly sub-stochastic rate matrix.

    The matrix is padded to doubly stochastic, then weighted permutations are
    peeled off the positive support until the residual is below 1e-12.

    Args:
        rate: Non-negative matrix with row and column sums at most 1.

    Returns:
        List of (p_k, M_k) with p_k > 0, sum p_k <= 1 and sum p_k M_k >= rate.

    Raises:
        ValueError: If `rate` is negative or has a line sum above 1.
    """
    rate = np.asarray(rate, dtype=float)
    if rate.ndim != 2 or rate.shape[0] != rate.shape[1]:
        raise ValueError(f"Rate matrix must be square, got shape {rate.shape}")
    if (rate < 0).any():
        raise ValueError("Rate matrix entries must be non-negative")
    if rate.sum(axis=1).max() > 1 + BVN_TOL or rate.sum(axis=0).max() > 1 + BVN_TOL:
        raise ValueError("Rate matrix is not doubly sub-stochastic")

    n = rate.shape[0]
    rows = np.arange(n)
    residual = pad_to_line_sums(rate, 1.0)
    terms = []
    total = 0.0
    while residual.max() > BVN_TOL and total < 1.0 - BVN_TOL:
        perm = perfect_matching(residual > BVN_TOL)
        if (perm == IDLE).any():
            # rounding broke Hall's condition on the support, take the heaviest permutation instead
            _, perm = linear_sum_assignment(residual, maximize=True)
        weight = float(residual[rows, perm].min())
        if weight <= BVN_TOL:
            break
        residual[rows, perm] -= weight
        residual[residual < BVN_TOL] = 0.0
        terms.append((weight, Matching(perm)))
        total += weight
    return terms
