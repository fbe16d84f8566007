"""Certify a pair of equal-size classes as regular or exhibit an irregular sub-pair.

All quantities are taken on the bipartite graph between ``a`` and ``b``.
Degrees are weight sums and common-neighbourhood sizes are inner products of
weight columns, so 0/1 graphs recover the usual counting definitions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantViolation
from .graph import WeightedGraph, edge_density, vertex_set


class Verdict(str, enum.Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"


class DeviationCase(str, enum.Enum):
    LOW_DEGREE = "low_degree"
    DEGREE_OUTLIERS = "degree_outliers"
    NEIGHBOURHOOD_DEVIATION = "neighbourhood_deviation"


@dataclass(frozen=True)
class PairCertificate:
    verdict: Verdict
    witness: tuple[np.ndarray, np.ndarray] | None = None
    case: DeviationCase | None = None
    # parameters fell outside the range where the three cases are exhaustive
    best_effort: bool = False

    @property
    def regular(self) -> bool:
        return self.verdict is Verdict.REGULAR

    def to_dict(self):
        out = {"verdict": self.verdict.value, "case": self.case.value if self.case else None}
        if self.witness is not None:
            out["witness"] = [self.witness[0].tolist(), self.witness[1].tolist()]
        out["bestEffort"] = self.best_effort
        return out


def _sides(g, a, b):
    a = vertex_set(a, g.n)
    b = vertex_set(b, g.n)
    if a.size != b.size:
        raise DomainError(f"classes must have equal size, got {a.size} and {b.size}")
    if a.size == 0:
        raise DomainError("classes must be nonempty")
    if np.intersect1d(a, b, assume_unique=True).size:
        raise DomainError("classes must be disjoint")
    return a, b


def _position(b, y):
    hits = np.flatnonzero(b == y)
    if hits.size != 1:
        raise DomainError(f"vertex {y} is not in b")
    return int(hits[0])


def _avg_degree(block):
    return float(block.sum() / block.shape[0])


def neighbourhood_deviation(g: WeightedGraph, a, b, y1, y2) -> float:
    """``|N(y1) & N(y2)| - d^2 / n`` with neighbourhoods restricted to ``a``."""
    a, b = _sides(g, a, b)
    if y1 == y2:
        raise DomainError("neighbourhood deviation needs two distinct vertices")
    i, j = _position(b, y1), _position(b, y2)
    block = g.weights[np.ix_(a, b)]
    common = float(np.dot(block[:, i], block[:, j]))
    d = _avg_degree(block)
    return common - d * d / a.size


def neighbourhood_deviation_matrix(g: WeightedGraph, a, b) -> np.ndarray:
    """All pairwise deviations over ``b`` at once by squaring the bipartite block.

    Diagonal entries are not deviations (they hold ``deg(y) - d^2/n``) and
    callers must ignore them.
    """
    a, b = _sides(g, a, b)
    block = g.weights[np.ix_(a, b)]
    d = _avg_degree(block)
    return block.T @ block - d * d / a.size


def set_deviation(g: WeightedGraph, a, b, y) -> float:
    """Mean deviation of ``y``: sum over ordered distinct pairs divided by ``|y|^2``."""
    a, b = _sides(g, a, b)
    y = vertex_set(y, g.n)
    if y.size < 2:
        raise DomainError("set deviation needs at least two vertices")
    if np.setdiff1d(y, b).size:
        raise DomainError("y must be a subset of b")
    sigma = neighbourhood_deviation_matrix(g, a, b)
    where = {v: i for i, v in enumerate(b.tolist())}
    idx = np.array([where[v] for v in y.tolist()])
    sub = sigma[np.ix_(idx, idx)]
    return float((sub.sum() - np.trace(sub)) / (y.size * y.size))


def in_classical_range(epsilon: float, n: int) -> bool:
    return 0 < epsilon < 1 / 16 and 2 * n ** -0.25 < epsilon


def witness_holds(g: WeightedGraph, a, b, a_prime, b_prime, epsilon) -> bool:
    """Size bounds ``>= eps^4 n / 4`` and density gap ``>= eps^4``."""
    n = len(a)
    e4 = epsilon**4
    if len(a_prime) < e4 * n / 4 or len(b_prime) < e4 * n / 4:
        return False
    if len(a_prime) == 0 or len(b_prime) == 0:
        return False
    gap = edge_density(g, a_prime, b_prime) - edge_density(g, a, b)
    return abs(gap) >= e4


def certify_pair(
    g: WeightedGraph, a, b, epsilon: float, case_three_multiplier: float = 2.0
) -> PairCertificate:
    """Run the three-case regularity test on the pair ``(a, b)``.

    1. average degree below ``eps^3 n``: regular.
    2. more than ``eps^4 n / 8`` vertices of ``b`` whose degree is at least
       ``eps^4 n`` away from the average: the larger same-direction group is
       ``B'`` and ``A' = a``.
    3. otherwise scan pivots ``y0`` of ``b`` (ascending position) with
       near-average degree; ``B' = {y : sigma(y0, y) >= mult * eps^4 n}`` and
       ``A' = N(y0)``. The first pivot whose witness checks out wins.

    Candidate witnesses must meet the size bounds ``>= eps^4 n / 4`` and the
    density gap ``>= eps^4``; a case-2 group that is too small falls through
    to case 3. In case 3 a vertex of ``a`` counts as a neighbour of ``y0``
    when its weight to ``y0`` exceeds the pair density.
    """
    a, b = _sides(g, a, b)
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    return _certify(g.weights, a, b, epsilon, case_three_multiplier)


def _certify(w, a, b, epsilon, multiplier, block=None):
    # trusted inputs: equal-size, disjoint, valid index arrays
    n = a.size
    best_effort = not in_classical_range(epsilon, n)
    if block is None:
        block = w[np.ix_(a, b)]
    found = certify_block(block, epsilon, multiplier)
    if found is None:
        return PairCertificate(Verdict.REGULAR, None, None, best_effort)
    if found == DeviationCase.LOW_DEGREE:
        return PairCertificate(Verdict.REGULAR, None, DeviationCase.LOW_DEGREE, best_effort)
    case, ai, bi = found
    a_prime, b_prime = a[ai], b[bi]
    if not _witness_ok(w, a, b, a_prime, b_prime, epsilon):
        raise InvariantViolation("witness fails its own size or density bound")
    return PairCertificate(Verdict.IRREGULAR, (a_prime, b_prime), case, best_effort)


def _mean(w, x, y):
    return float(w[np.ix_(x, y)].sum() / (x.size * y.size))


def _witness_ok(w, a, b, a_prime, b_prime, epsilon):
    e4 = epsilon**4
    bound = e4 * a.size / 4
    if a_prime.size == 0 or b_prime.size == 0:
        return False
    if a_prime.size < bound or b_prime.size < bound:
        return False
    return abs(_mean(w, a_prime, b_prime) - _mean(w, a, b)) >= e4


def certify_block(block: np.ndarray, epsilon: float, multiplier: float = 2.0):
    """Three-case test on an ``n x n`` bipartite weight block (rows: a, cols: b).

    Returns None for a regular pair found by exhausting case 3,
    ``DeviationCase.LOW_DEGREE`` for case 1, or ``(case, rows, cols)`` with
    the witness as positions into the block.
    """
    n = block.shape[0]
    d = _avg_degree(block)
    if d < epsilon**3 * n:
        return DeviationCase.LOW_DEGREE
    e4 = epsilon**4
    e4n = e4 * n
    size_bound = e4n / 4
    pair_density = d / n

    def ok(rows, cols):
        if rows.size == 0 or cols.size == 0 or rows.size < size_bound or cols.size < size_bound:
            return False
        return abs(block[np.ix_(rows, cols)].mean() - pair_density) >= e4

    deg = block.sum(axis=0)
    dev = deg - d
    above = np.flatnonzero(dev >= e4n)
    below = np.flatnonzero(dev <= -e4n)
    if above.size + below.size > e4n / 8:
        group = above if above.size >= below.size else below
        rows = np.arange(n)
        if ok(rows, group):
            return DeviationCase.DEGREE_OUTLIERS, rows, group

    pivots = np.flatnonzero(np.abs(dev) < e4n)
    if pivots.size == 0:
        return None
    sigma = block.T @ block
    sigma -= d * d / n
    threshold = multiplier * e4n
    for y0 in pivots.tolist():
        members = np.flatnonzero(sigma[y0] >= threshold)
        members = members[members != y0]
        if members.size == 0 or members.size < size_bound:
            continue
        nbrs = np.flatnonzero(block[:, y0] > pair_density)
        if ok(nbrs, members):
            return DeviationCase.NEIGHBOURHOOD_DEVIATION, nbrs, members
    return None
