"""Pairwise clusterers and the compress -> cluster -> project pipeline."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError
from .graph import WeightedGraph
from .partition import Partition, RunConfig, run_partition
from .reduced import UNASSIGNED, WEIGHTED, ReducedGraph, build_reduced, project_labels

log = logging.getLogger(__name__)

DOMINANT_SETS = "ds"
SPECTRAL = "sc"


@dataclass(frozen=True)
class ClusterResult:
    """Labels are dense in ``[0, num_clusters)``; ``UNASSIGNED`` marks C0 vertices
    when the result comes from the two-phase pipeline."""

    labels: np.ndarray
    num_clusters: int
    method: str
    cohesion: tuple | None = None
    flags: tuple = ()

    def to_dict(self):
        return {
            "method": self.method,
            "numClusters": self.num_clusters,
            "labels": self.labels.tolist(),
            "flags": list(self.flags),
        }

    def save_json(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    def save_csv(self, path):
        with Path(path).open("w") as fh:
            fh.write("vertex,label\n")
            for v, label in enumerate(self.labels.tolist()):
                fh.write(f"{v},{label}\n")

    @classmethod
    def load_json(cls, path):
        data = json.loads(Path(path).read_text())
        return cls(
            labels=np.asarray(data["labels"], dtype=np.int64),
            num_clusters=int(data["numClusters"]),
            method=data["method"],
            flags=tuple(data.get("flags", ())),
        )


def dense_labels(labels) -> np.ndarray:
    """Relabel to 0..m-1 in order of first appearance; negatives are kept as is."""
    labels = np.asarray(labels)
    out = np.full(labels.shape, UNASSIGNED, dtype=np.int64)
    seen = {}
    for i, v in enumerate(labels.tolist()):
        if isinstance(v, (int, np.integer)) and v < 0:
            continue
        out[i] = seen.setdefault(v, len(seen))
    return out


def _replicator(a, x, tol, max_iters):
    for it in range(1, max_iters + 1):
        ax = a @ x
        payoff = float(x @ ax)
        if payoff <= 0.0:
            return x, payoff, True
        nxt = x * ax / payoff
        if np.abs(nxt - x).sum() < tol:
            return nxt, float(nxt @ (a @ nxt)), True
        x = nxt
    return x, float(x @ (a @ x)), False


def dominant_sets(
    w: WeightedGraph,
    tol: float = 1e-6,
    max_iters: int = 1000,
    min_cluster_size: int = 1,
    seed: int = 0,
    support_ratio: float = 1e-3,
) -> ClusterResult:
    """Peel off dominant sets one at a time with discrete replicator dynamics.

    Each round starts near the barycentre of the remaining vertices (a small
    seeded perturbation breaks ties between symmetric blocks), runs the
    dynamics, and removes the support ``{i : x_i >= support_ratio * max(x)}``.
    Vertices left once fewer than ``min_cluster_size`` remain, or once the
    remainder carries no weight, become singletons.
    """
    n = w.n
    if n < 1:
        raise DomainError("dominant sets needs at least one vertex")
    rng = np.random.default_rng(seed)
    labels = np.full(n, -1, dtype=np.int64)
    cohesion = []
    flags = []
    remaining = np.arange(n)
    current = 0
    while remaining.size:
        if remaining.size < max(min_cluster_size, 1):
            break
        a = w.weights[np.ix_(remaining, remaining)]
        if not a.any():
            break
        m = remaining.size
        x = np.full(m, 1.0 / m) * (1.0 + 1e-3 * rng.random(m))
        x /= x.sum()
        x, payoff, converged = _replicator(a, x, tol, max_iters)
        if not converged:
            flags.append(f"cluster {current}: no convergence in {max_iters} iterations")
        support = x >= support_ratio * x.max()
        if payoff <= 0.0 or support.sum() == 0:
            break
        labels[remaining[support]] = current
        cohesion.append(payoff)
        current += 1
        remaining = remaining[~support]
    for v in remaining.tolist():
        labels[v] = current
        cohesion.append(0.0)
        current += 1
    return ClusterResult(labels, current, DOMINANT_SETS, tuple(cohesion), tuple(flags))


def spectral_clustering(w: WeightedGraph, k: int, seed: int = 0) -> ClusterResult:
    """Normalised-affinity embedding, row normalisation, then seeded k-means."""
    from sklearn.cluster import KMeans

    n = w.n
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    if k == 1:
        return ClusterResult(np.zeros(n, dtype=np.int64), 1, SPECTRAL)
    deg = w.weights.sum(axis=1)
    inv_sqrt = np.zeros(n)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    affinity = inv_sqrt[:, None] * w.weights * inv_sqrt[None, :]
    try:
        _, vecs = np.linalg.eigh(affinity)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigen-decomposition failed: {exc}") from exc
    emb = vecs[:, -k:]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)
    km = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(emb)
    labels = dense_labels(km.labels_)
    return ClusterResult(labels, int(labels.max()) + 1, SPECTRAL)


def cluster(w: WeightedGraph, method: str, params: dict | None = None) -> ClusterResult:
    params = dict(params or {})
    if method == DOMINANT_SETS:
        allowed = {"tol", "max_iters", "min_cluster_size", "seed", "support_ratio"}
        return dominant_sets(w, **{k: v for k, v in params.items() if k in allowed})
    if method == SPECTRAL:
        if "k" not in params:
            raise DomainError("spectral clustering needs k")
        return spectral_clustering(w, int(params["k"]), int(params.get("seed", 0)))
    raise DomainError(f"unknown clustering method {method!r}")


@dataclass(frozen=True)
class TwoPhaseResult:
    result: ClusterResult  # over the original vertices
    partition: Partition
    reduced: ReducedGraph | None
    reduced_result: ClusterResult | None
    flags: tuple = field(default=())

    @property
    def labels(self) -> np.ndarray:
        return self.result.labels


def two_phase(
    g: WeightedGraph,
    cfg: RunConfig,
    method: str = DOMINANT_SETS,
    params: dict | None = None,
    threads: int = 1,
) -> TwoPhaseResult:
    """Partition ``g``, cluster its weighted reduced graph, project labels back.

    With fewer than two classes there is nothing to compress and ``g`` is
    clustered directly (flagged). Spectral ``k`` larger than the reduced graph
    is clipped (flagged).
    """
    params = dict(params or {})
    threshold = params.pop("d", None)
    flags = []
    p = run_partition(g, cfg, threads)
    if p.k < 2:
        flags.append("fallback: fewer than two classes, clustered the input graph directly")
        direct = cluster(g, method, params)
        return TwoPhaseResult(direct, p, None, None, tuple(flags + list(direct.flags)))
    if p.halt_reason != "regular":
        flags.append(f"partition halted: {p.halt_reason}")
    r = build_reduced(
        g, p, d=threshold, mode=WEIGHTED, check=p.check,
        case_three_multiplier=cfg.case_three_multiplier, threads=threads,
    )
    if method == SPECTRAL and int(params.get("k", 0)) > r.k:
        flags.append(f"k clipped from {params['k']} to {r.k}")
        params["k"] = r.k
    reduced_result = cluster(r.as_graph(), method, params)
    class_labels = reduced_result.labels.copy()
    # a class with no regular dense pair gives the clusterer nothing to go on
    isolated = ~r.adjacency.any(axis=1)
    if isolated.any() and not isolated.all():
        class_labels[isolated] = UNASSIGNED
        class_labels = dense_labels(class_labels)
        flags.append(f"{int(isolated.sum())} isolated classes left unassigned")
    labels = project_labels(r, class_labels.tolist())
    labels = np.asarray(labels, dtype=np.int64)
    result = ClusterResult(
        labels=labels,
        num_clusters=int(class_labels.max()) + 1 if class_labels.size else 0,
        method=method,
        cohesion=reduced_result.cohesion,
        flags=tuple(flags) + reduced_result.flags,
    )
    return TwoPhaseResult(result, p, r, reduced_result, tuple(flags) + reduced_result.flags)
