"""Image segmentation driver and agreement metrics (PRI, VI, compression rate)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import DOMINANT_SETS, TwoPhaseResult, two_phase
from .errors import DomainError
from .graph import ImageGrid, read_pgm_raw, similarity_graph, write_pgm
from .partition import RunConfig
from .reduced import UNASSIGNED


@dataclass(frozen=True)
class Segmentation:
    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if labels.size != self.width * self.height:
            raise DomainError(
                f"{labels.size} labels for a {self.width}x{self.height} segmentation"
            )
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.size

    @classmethod
    def from_array(cls, labels):
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise DomainError("expected a 2-D label array")
        return cls(labels.shape[1], labels.shape[0], labels.ravel())

    def as_array(self) -> np.ndarray:
        return self.labels.reshape(self.height, self.width)

    def num_segments(self) -> int:
        return int(np.unique(self.labels).size)

    def save_json(self, path):
        Path(path).write_text(
            json.dumps({"width": self.width, "height": self.height, "labels": self.labels.tolist()})
            + "\n"
        )

    @classmethod
    def load_json(cls, path):
        data = json.loads(Path(path).read_text())
        return cls(int(data["width"]), int(data["height"]), data["labels"])

    def save_pgm(self, path):
        """Label map with labels spread evenly over the gray range.

        Ranks of the distinct labels are stored, so reading it back yields a
        relabelled but equivalent segmentation.
        """
        _, ranks = np.unique(self.labels, return_inverse=True)
        m = int(ranks.max()) + 1 if ranks.size else 1
        if m <= 256:
            step = 255 // max(m - 1, 1)
            levels, maxval = ranks * step, 255
        else:
            levels, maxval = ranks, max(m - 1, 1)
            if maxval > 65535:
                raise DomainError("too many segments for a PGM label map")
        write_pgm(path, levels.reshape(self.height, self.width), maxval=maxval)

    @classmethod
    def load(cls, path):
        """Read a segmentation from JSON or from a PGM label map (gray level = label)."""
        path = Path(path)
        if path.suffix.lower() == ".json":
            return cls.load_json(path)
        levels, _ = read_pgm_raw(path)
        return cls.from_array(levels)


def _contingency(s, t):
    _, si = np.unique(s, return_inverse=True)
    _, ti = np.unique(t, return_inverse=True)
    table = np.zeros((si.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (si, ti), 1)
    return table


def _same_dims(a: Segmentation, b: Segmentation):
    if (a.width, a.height) != (b.width, b.height):
        raise DomainError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def _pairs(counts):
    counts = np.asarray(counts, dtype=np.int64)
    return int((counts * (counts - 1) // 2).sum())


def rand_index(s: Segmentation, t: Segmentation) -> float:
    _same_dims(s, t)
    n = s.n
    total = n * (n - 1) // 2
    if total == 0:
        return 1.0
    table = _contingency(s.labels, t.labels)
    both = _pairs(table)
    same_s = _pairs(table.sum(axis=1))
    same_t = _pairs(table.sum(axis=0))
    agree = total - same_s - same_t + 2 * both
    return agree / total


def pri(s: Segmentation, ground_truths) -> float:
    """Probabilistic Rand index against a set of ground truths.

    With ``p_ij`` the fraction of ground truths that put pixels i and j
    together, the pair sum is linear in ``p_ij`` and reduces exactly to the
    mean Rand index over the ground truths, which contingency tables give
    without enumerating pixel pairs.
    """
    ground_truths = list(ground_truths)
    if not ground_truths:
        raise DomainError("PRI needs at least one ground truth")
    for gt in ground_truths:
        _same_dims(s, gt)
    return float(math.fsum(rand_index(s, gt) for gt in ground_truths) / len(ground_truths))


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


def vi(s: Segmentation, s_prime: Segmentation) -> float:
    """Variation of information in bits: ``H(S) + H(S') - 2 I(S, S')``."""
    _same_dims(s, s_prime)
    n = s.n
    table = _contingency(s.labels, s_prime.labels)
    h_s = _entropy(table.sum(axis=1), n)
    h_t = _entropy(table.sum(axis=0), n)
    h_joint = _entropy(table.ravel(), n)
    mutual = h_s + h_t - h_joint
    return max(0.0, h_s + h_t - 2.0 * mutual)


def compression_rate(n: int, k: int) -> float:
    """``1 - k / n``."""
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    return 1.0 - k / n


def _nearest_fill(labels, missing):
    known = np.flatnonzero(~missing)
    holes = np.flatnonzero(missing)
    right = np.searchsorted(known, holes)
    left = np.clip(right - 1, 0, known.size - 1)
    right = np.clip(right, 0, known.size - 1)
    dl = np.abs(holes - known[left])
    dr = np.abs(known[right] - holes)
    pick = np.where(dl <= dr, known[left], known[right])
    labels[holes] = labels[pick]


def fill_unassigned(labels, unassigned=UNASSIGNED, width=None):
    """Give each unassigned entry the label of its nearest assigned neighbour
    on the same scanline (ties go to the earlier one).

    With ``width`` given, rows are ``width`` long and a row with no assigned
    pixel falls back to the nearest assigned pixel in overall scan order.
    """
    labels = np.asarray(labels, dtype=np.int64).copy()
    missing = labels == unassigned
    count = int(missing.sum())
    if not count:
        return labels, 0
    if count == labels.size:
        labels[:] = 0
        return labels, count
    if width is None or labels.size % width:
        _nearest_fill(labels, missing)
        return labels, count
    rows = labels.reshape(-1, width)
    gaps = missing.reshape(-1, width)
    for r in np.flatnonzero(gaps.any(axis=1) & ~gaps.all(axis=1)):
        _nearest_fill(rows[r], gaps[r])
    still = labels == unassigned
    if still.any():
        _nearest_fill(labels, still)
    return labels, count


@dataclass
class SegmentationDiagnostics:
    n: int
    k: int
    compression_rate: float
    index_history: list
    halt_reason: str | None
    num_segments: int
    filled_unassigned: int
    flags: list = field(default_factory=list)

    def csv_row(self, image: str, columns: int | None = None) -> list:
        hist = list(self.index_history)
        if columns is not None:
            hist = hist[:columns] + [""] * max(0, columns - len(hist))
        return [image, self.n, self.k, f"{self.compression_rate:.6f}", *hist]


def write_diagnostics_csv(path, rows, index_columns=None):
    """Rows are ``(image, diagnostics)`` pairs; one ``ind_i`` column per index step."""
    rows = list(rows)
    if index_columns is None:
        index_columns = max((len(d.index_history) for _, d in rows), default=0)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image", "n", "k", "compressionRate", *[f"ind_{i + 1}" for i in range(index_columns)]]
        )
        for image, diag in rows:
            writer.writerow(diag.csv_row(image, index_columns))


def segment_image(
    img: ImageGrid,
    sigma: float,
    cfg: RunConfig | None = None,
    method: str = DOMINANT_SETS,
    params: dict | None = None,
    threads: int = 1,
) -> tuple[Segmentation, SegmentationDiagnostics, TwoPhaseResult]:
    """Pixel similarity graph, two-phase clustering, labels back on the grid.

    Exceptional pixels are filled from their nearest labelled scanline
    neighbour so the returned segmentation is total.
    """
    cfg = cfg or RunConfig()
    g = similarity_graph(img, sigma)
    outcome = two_phase(g, cfg, method, params, threads)
    labels, filled = fill_unassigned(outcome.labels, width=img.width)
    seg = Segmentation(img.width, img.height, labels)
    k = outcome.partition.k
    flags = list(outcome.flags)
    if filled:
        flags.append(f"{filled} exceptional pixels filled from scanline neighbours")
    diag = SegmentationDiagnostics(
        n=g.n,
        k=k,
        compression_rate=compression_rate(g.n, k),
        index_history=list(outcome.partition.index_history),
        halt_reason=outcome.partition.halt_reason,
        num_segments=seg.num_segments(),
        filled_unassigned=filled,
        flags=flags,
    )
    return seg, diag, outcome
