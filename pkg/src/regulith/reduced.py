"""Reduced graphs over partition classes, blow-ups, and label projection."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError
from .graph import WeightedGraph, class_densities, save_edge_list
from .partition import Partition, RegularityCheck, RunConfig, check_partition

STRICT = "strict"
WEIGHTED = "weighted"
UNASSIGNED = -1


@dataclass(frozen=True)
class ReducedGraph:
    adjacency: np.ndarray
    class_map: tuple
    exceptional: np.ndarray
    epsilon: float
    threshold: float
    mode: str

    @property
    def k(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_original(self) -> int:
        return sum(c.size for c in self.class_map) + self.exceptional.size

    def as_graph(self) -> WeightedGraph:
        return WeightedGraph(self.adjacency)

    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))

    def save(self, path, sidecar=None):
        """Edge list at ``path`` plus a JSON class map at ``sidecar``."""
        path = Path(path)
        save_edge_list(
            self.as_graph(),
            path,
            header=f"reduced graph k={self.k} mode={self.mode} "
            f"epsilon={self.epsilon!r} threshold={self.threshold!r}",
        )
        sidecar = Path(sidecar) if sidecar else path.with_suffix(".classmap.json")
        sidecar.write_text(
            json.dumps(
                {
                    "k": self.k,
                    "mode": self.mode,
                    "epsilon": self.epsilon,
                    "threshold": self.threshold,
                    "classMap": [c.tolist() for c in self.class_map],
                    "exceptional": self.exceptional.tolist(),
                }
            )
            + "\n"
        )
        return path, sidecar


def default_threshold(g: WeightedGraph) -> float:
    """Mean off-diagonal weight; 0 for graphs whose off-diagonal weights are all equal.

    On a constant graph every class pair sits exactly at the mean, so a strict
    "above the mean" test would delete every edge.
    """
    n = g.n
    if n < 2:
        return 0.0
    w = g.weights
    first = w[0, 1]
    expected = n * (n - 1) + (n if first == 0.0 else 0)
    if np.count_nonzero(w == first) == expected:
        return 0.0
    return g.mean_weight()


def build_reduced(
    g: WeightedGraph,
    p: Partition,
    epsilon: float | None = None,
    d: float | None = None,
    mode: str = WEIGHTED,
    check: RegularityCheck | None = None,
    case_three_multiplier: float = 2.0,
    threads: int = 1,
) -> ReducedGraph:
    """Class pairs are joined when certified regular with density above ``d``.

    In weighted mode the edge carries the pair density, otherwise 1. An
    existing ``check`` is reused when it was made at the same epsilon.
    """
    if mode not in (STRICT, WEIGHTED):
        raise DomainError(f"unknown mode {mode!r}")
    epsilon = p.epsilon if epsilon is None else epsilon
    d = default_threshold(g) if d is None else d
    if check is None or check.epsilon != epsilon or len(check.certificates) != p.k * (p.k - 1) // 2:
        cfg = RunConfig(epsilon=min(epsilon, 1 - 1e-12), case_three_multiplier=case_three_multiplier)
        check = check_partition(g, p, cfg, threads)
    regular = check.as_matrix() if p.k >= 2 else np.zeros((p.k, p.k), dtype=bool)
    dens = class_densities(g, p.classes)
    keep = regular & (dens > d)
    np.fill_diagonal(keep, False)
    adjacency = np.where(keep, dens if mode == WEIGHTED else 1.0, 0.0)
    return ReducedGraph(
        adjacency=adjacency,
        class_map=tuple(p.classes),
        exceptional=p.exceptional,
        epsilon=epsilon,
        threshold=float(d),
        mode=mode,
    )


def blow_up(r: ReducedGraph, t: int) -> WeightedGraph:
    """Replace each reduced vertex by ``t`` independent vertices and each edge by K_{t,t}."""
    if r.mode != STRICT:
        raise DomainError("blow-up is defined on the binary (strict) reduced graph")
    if t < 1:
        raise DomainError("t must be at least 1")
    return WeightedGraph(np.kron(r.adjacency, np.ones((t, t))))


def project_labels(r: ReducedGraph, cluster_labels) -> np.ndarray:
    """Give every original vertex the label of its class; C0 gets ``UNASSIGNED``."""
    if isinstance(cluster_labels, dict):
        missing = [i for i in range(r.k) if i not in cluster_labels]
        if missing:
            raise DomainError(f"no label for classes {missing}")
        labels = [cluster_labels[i] for i in range(r.k)]
    else:
        labels = list(cluster_labels)
        if len(labels) != r.k:
            raise DomainError(f"expected {r.k} class labels, got {len(labels)}")
    out = np.full(r.n_original, UNASSIGNED, dtype=object if _non_int(labels) else np.int64)
    for members, label in zip(r.class_map, labels):
        out[members] = label
    return out


def _non_int(labels):
    return any(not isinstance(v, (int, np.integer)) for v in labels)
