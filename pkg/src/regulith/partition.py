"""Equitable partitions and their iterative refinement towards regularity.

The refinement is the constant-fan-out heuristic: each class takes part in
at most one (randomly chosen) irregular pair and is cut into ``l`` equal
subclasses, instead of the ``4^k`` fan-out of the exact construction.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import DegenerateRefinement, DomainError
from .graph import WeightedGraph, class_densities
from .regularity import (
    DeviationCase,
    PairCertificate,
    Verdict,
    _certify,
    in_classical_range,
)

log = logging.getLogger(__name__)

HALT_REGULAR = "regular"
HALT_DEGENERATE = "degenerate"
HALT_MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class RunConfig:
    epsilon: float = 0.25
    min_classes: int = 4
    subclasses: int = 2
    max_iterations: int = 20
    min_class_size: int = 2
    rng_seed: int = 0
    case_three_multiplier: float = 2.0

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.subclasses < 2:
            raise DomainError("subclasses must be at least 2")
        if self.min_classes < 1:
            raise DomainError("min_classes must be at least 1")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")
        if self.min_class_size < 1:
            raise DomainError("min_class_size must be at least 1")
        if not self.case_three_multiplier > 0:
            raise DomainError("case_three_multiplier must be positive")


@dataclass(frozen=True)
class Partition:
    classes: tuple
    exceptional: np.ndarray
    epsilon: float
    iteration: int = 1
    index_history: tuple = ()
    halt_reason: str | None = None
    irregular_history: tuple = ()
    check: "RegularityCheck | None" = field(default=None, compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def class_size(self) -> int:
        return int(self.classes[0].size) if self.classes else 0

    @property
    def n(self) -> int:
        return sum(c.size for c in self.classes) + self.exceptional.size

    @property
    def is_regular(self) -> bool:
        """Halted on the pair-count test with a small enough exceptional class."""
        return self.halt_reason == HALT_REGULAR and self.exceptional.size < self.epsilon * self.n

    def labels(self) -> np.ndarray:
        """Class index per vertex, -1 for the exceptional class."""
        out = np.full(self.n, -1, dtype=np.int64)
        for i, members in enumerate(self.classes):
            out[members] = i
        return out

    def validate(self, n=None):
        n = self.n if n is None else n
        sizes = {c.size for c in self.classes}
        if len(sizes) > 1:
            raise DomainError(f"classes are not equitable: sizes {sorted(sizes)}")
        everything = np.concatenate([*self.classes, self.exceptional]) if self.k else self.exceptional
        if everything.size != n or np.unique(everything).size != n:
            raise DomainError("classes and exceptional set must partition the vertex set")
        if n and (everything.min() < 0 or everything.max() >= n):
            raise DomainError("vertex index out of range")

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "k": self.k,
            "classSize": self.class_size,
            "iteration": self.iteration,
            "classes": [c.tolist() for c in self.classes],
            "exceptional": self.exceptional.tolist(),
            "indexHistory": list(self.index_history),
            "irregularHistory": list(self.irregular_history),
            "haltReason": self.halt_reason,
        }

    @classmethod
    def from_dict(cls, data):
        p = cls(
            classes=tuple(np.asarray(c, dtype=np.int64) for c in data["classes"]),
            exceptional=np.asarray(data.get("exceptional", []), dtype=np.int64),
            epsilon=float(data["epsilon"]),
            iteration=int(data.get("iteration", 1)),
            index_history=tuple(float(v) for v in data.get("indexHistory", [])),
            halt_reason=data.get("haltReason"),
            irregular_history=tuple(int(v) for v in data.get("irregularHistory", [])),
        )
        p.validate()
        return p

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class RegularityCheck:
    """Certificates for every unordered class pair ``(r, s)``, ``r < s``."""

    certificates: tuple  # of ((r, s), PairCertificate)
    epsilon: float

    @property
    def irregular(self) -> list:
        return [(pair, c) for pair, c in self.certificates if not c.regular]

    @property
    def irregular_count(self) -> int:
        return sum(1 for _, c in self.certificates if not c.regular)

    @property
    def halts(self) -> bool:
        k = _pair_count_to_k(len(self.certificates))
        return self.irregular_count <= self.epsilon * math.comb(k, 2)

    def certificate(self, r, s) -> PairCertificate:
        if r > s:
            raise DomainError("pairs are stored with r < s")
        for pair, c in self.certificates:
            if pair == (r, s):
                return c
        raise KeyError((r, s))

    def as_matrix(self) -> np.ndarray:
        """Boolean k x k matrix, True where the pair is certified regular."""
        k = _pair_count_to_k(len(self.certificates))
        out = np.zeros((k, k), dtype=bool)
        for (r, s), c in self.certificates:
            out[r, s] = out[s, r] = c.regular
        return out


def _pair_count_to_k(pairs):
    k = int(round((1 + math.sqrt(1 + 8 * pairs)) / 2)) if pairs else 1
    return k


_MAX_BITS = 1 << 16


@dataclass(frozen=True)
class ExactConstants:
    """Constants of the exact algorithm. ``T``/``N`` are None when they overflow."""

    b: int
    T: int | None
    N: int | None
    steps: int  # number of applications of f needed for T

    @property
    def T_overflow(self) -> bool:
        return self.T is None

    @property
    def N_overflow(self) -> bool:
        return self.N is None

    def to_dict(self):
        return {
            "b": self.b,
            "T": "overflow" if self.T is None else str(self.T),
            "N": "overflow" if self.N is None else str(self.N),
            "steps": self.steps,
        }


def exact_constants(epsilon: float, t: int, max_bits: int = _MAX_BITS) -> ExactConstants:
    """Thresholds of the exact partitioning algorithm, in exact arithmetic.

    ``b`` is the least integer with ``4^b > 600 (eps^4/16)^-5`` and ``b >= t``;
    ``T = f(ceil(10 (eps^4/16)^-5))`` with ``f(0) = b``, ``f(i+1) = f(i) 4^f(i)``;
    ``N = max(T 4^(2T), 32 T / eps^5)``. Values wider than ``max_bits`` bits are
    reported as overflow.
    """
    if not 0 < epsilon <= 1:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon}")
    if t < 1:
        raise DomainError("t must be at least 1")
    eps = Fraction(epsilon)
    inv_gamma5 = (16 / eps**4) ** 5
    bound = 600 * inv_gamma5
    b = 0
    while Fraction(4) ** b <= bound:
        b += 1
    b = max(b, t, 1)
    steps = math.ceil(10 * inv_gamma5)

    T = b
    for _ in range(steps):
        # bit length of f * 4^f is about 2f + log2(f)
        if 2 * T + T.bit_length() > max_bits:
            T = None
            break
        T = T * 4**T
    N = None
    if T is not None and 2 * 2 * T + T.bit_length() <= max_bits:
        N = max(T * 4 ** (2 * T), math.ceil(32 * T / eps**5))
    return ExactConstants(b=b, T=T, N=N, steps=steps)


def initial_partition(g: WeightedGraph, b: int, seed: int = 0, epsilon: float = 0.25) -> Partition:
    """Randomly split the vertices into ``b`` classes of ``n // b``; the rest go to C0."""
    n = g.n
    if b < 1:
        raise DomainError("b must be at least 1")
    if n < b:
        raise DomainError(f"cannot split {n} vertices into {b} nonempty classes")
    rng = np.random.default_rng([seed, 0])
    perm = rng.permutation(n)
    c = n // b
    classes = tuple(np.sort(perm[i * c : (i + 1) * c]) for i in range(b))
    return Partition(classes=classes, exceptional=np.sort(perm[b * c :]), epsilon=epsilon)


def index_of_partition(g: WeightedGraph, p: Partition) -> float:
    """``(1/k^2) * sum_{s<t} d(C_s, C_t)^2`` over the non-exceptional classes."""
    if p.k < 2:
        raise DomainError("index of partition needs at least two classes")
    dens = class_densities(g, p.classes)
    return float(np.sum(np.triu(dens, k=1) ** 2) / (p.k * p.k))


def check_partition(g: WeightedGraph, p: Partition, cfg: RunConfig, threads: int = 1) -> RegularityCheck:
    """Certify every class pair. Low-density pairs are settled in bulk from the
    density matrix; the rest go through the full three-case test."""
    k = p.k
    pairs = [(r, s) for r in range(k) for s in range(r + 1, k)]
    if not pairs:
        return RegularityCheck((), cfg.epsilon)
    w = g.weights
    dens = class_densities(g, p.classes)
    best_effort = not in_classical_range(cfg.epsilon, p.class_size)
    # average degree d = density * n, so case 1 is density < eps^3
    low = dens < cfg.epsilon**3
    low_cert = PairCertificate(Verdict.REGULAR, None, DeviationCase.LOW_DEGREE, best_effort)

    def work(pair):
        r, s = pair
        if low[r, s]:
            return low_cert
        return _certify(w, p.classes[r], p.classes[s], cfg.epsilon, cfg.case_three_multiplier)

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            certs = list(pool.map(work, pairs, chunksize=256))
    else:
        certs = [work(pair) for pair in pairs]
    return RegularityCheck(tuple(zip(pairs, certs)), cfg.epsilon)


def _select_pairs(k, check, rng):
    """Match each class with at most one irregular partner, uniformly at random."""
    partners = {r: [] for r in range(k)}
    for (r, s), cert in check.irregular:
        partners[r].append((s, (r, s), cert))
        partners[s].append((r, (r, s), cert))
    matched = {}
    for r in rng.permutation(k).tolist():
        if r in matched:
            continue
        free = [entry for entry in partners[r] if entry[0] not in matched]
        if not free:
            continue
        s, pair, cert = free[int(rng.integers(len(free)))]
        matched[r] = (s, pair, cert)
        matched[s] = (r, pair, cert)
    return matched


def _witness_order(g, members, own_witness, partner_witness, upward, rng):
    """Witness members first, then the rest; within each part, sort by
    affinity to the partner's witness in the direction of the deviation."""
    members = rng.permutation(members)
    inside = np.isin(members, own_witness)
    affinity = g.weights[np.ix_(members, partner_witness)].mean(axis=1)
    if upward:
        affinity = -affinity
    keys = np.lexsort((affinity, ~inside))
    return members[keys]


def refine(
    g: WeightedGraph, p: Partition, check: RegularityCheck, cfg: RunConfig
) -> Partition:
    """One refinement step; every class is cut into ``cfg.subclasses`` equal parts.

    Raises :class:`DegenerateRefinement` when the new classes would be smaller
    than ``cfg.min_class_size`` or C0 would reach ``epsilon * n``.
    """
    if check.irregular_count == 0:
        raise DomainError("refine needs at least one irregular pair")
    l = cfg.subclasses
    n = g.n
    size = p.class_size // l
    if size < cfg.min_class_size:
        raise DegenerateRefinement(f"class size would drop to {size}")
    rng = np.random.default_rng([cfg.rng_seed, p.iteration])
    matched = _select_pairs(p.k, check, rng)

    new_classes = []
    leftovers = [p.exceptional]
    for r, members in enumerate(p.classes):
        if r in matched:
            s, pair, cert = matched[r]
            a_prime, b_prime = cert.witness
            own, other = (a_prime, b_prime) if pair[0] == r else (b_prime, a_prime)
            upward = (
                np.mean(g.weights[np.ix_(a_prime, b_prime)])
                >= np.mean(g.weights[np.ix_(p.classes[pair[0]], p.classes[pair[1]])])
            )
            ordered = _witness_order(g, members, own, other, upward, rng)
        else:
            ordered = rng.permutation(members)
        for j in range(l):
            new_classes.append(np.sort(ordered[j * size : (j + 1) * size]))
        leftovers.append(ordered[l * size :])

    exceptional = np.sort(np.concatenate(leftovers))
    if exceptional.size >= cfg.epsilon * n:
        raise DegenerateRefinement(
            f"exceptional class would hold {exceptional.size} >= {cfg.epsilon} * {n} vertices"
        )
    prior = index_of_partition(g, p) if p.k >= 2 else 0.0
    return Partition(
        classes=tuple(new_classes),
        exceptional=exceptional,
        epsilon=p.epsilon,
        iteration=p.iteration + 1,
        index_history=p.index_history + (prior,),
        irregular_history=p.irregular_history + (check.irregular_count,),
    )


def run_partition(g: WeightedGraph, cfg: RunConfig, threads: int = 1) -> Partition:
    """Alternate checking and refinement until a halt condition holds.

    ``index_history[i]`` is the index of the i-th partition visited, the
    last one included; ``irregular_history`` likewise counts irregular pairs.
    """
    if g.n < cfg.min_classes:
        raise DomainError(f"graph has {g.n} vertices, fewer than min_classes={cfg.min_classes}")
    p = initial_partition(g, cfg.min_classes, cfg.rng_seed, cfg.epsilon)
    while True:
        check = check_partition(g, p, cfg, threads)
        reason = None
        if check.halts:
            reason = HALT_REGULAR
        elif p.iteration >= cfg.max_iterations:
            reason = HALT_MAX_ITERATIONS
        else:
            try:
                nxt = refine(g, p, check, cfg)
            except DegenerateRefinement as exc:
                log.info("refinement refused at iteration %d: %s", p.iteration, exc)
                reason = HALT_DEGENERATE
            else:
                if p.k >= 2 and index_of_partition(g, nxt) < nxt.index_history[-1]:
                    log.warning("index of partition decreased at iteration %d", nxt.iteration)
                p = nxt
                continue
        final_index = index_of_partition(g, p) if p.k >= 2 else 0.0
        return replace(
            p,
            halt_reason=reason,
            index_history=p.index_history + (final_index,),
            irregular_history=p.irregular_history + (check.irregular_count,),
            check=check,
        )
