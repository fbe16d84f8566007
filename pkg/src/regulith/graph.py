"""Dense weighted graphs, pair densities, and ingestion of edge lists and images."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError

_ROW_CHUNK = 1024


class WeightedGraph:
    """Symmetric affinity matrix with entries in [0, 1] and a zero diagonal.

    The matrix is copied on construction and frozen, so instances can be
    shared freely between threads.
    """

    __slots__ = ("_w",)

    def __init__(self, weights, validate=True):
        w = np.array(weights, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DomainError(f"weights must be a square matrix, got shape {w.shape}")
        if validate:
            _check_weights(w)
        w.setflags(write=False)
        self._w = w

    @classmethod
    def _wrap(cls, w):
        # trusted fast path for matrices built in this module
        g = cls.__new__(cls)
        w.setflags(write=False)
        g._w = w
        return g

    @property
    def n(self) -> int:
        return self._w.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return self._w

    def __repr__(self):
        return f"WeightedGraph(n={self.n})"

    def degrees(self) -> np.ndarray:
        return self._w.sum(axis=1)

    def mean_weight(self) -> float:
        """Mean off-diagonal weight."""
        n = self.n
        if n < 2:
            return 0.0
        return float(self._w.sum() / (n * (n - 1)))


def _check_weights(w):
    n = w.shape[0]
    if not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite")
    if w.size and (w.min() < 0.0 or w.max() > 1.0):
        raise DomainError("weights must lie in [0, 1]")
    if np.any(np.diagonal(w) != 0.0):
        raise DomainError("self-loops are not allowed: diagonal must be zero")
    for start in range(0, n, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n)
        if not np.array_equal(w[start:stop], w[:, start:stop].T):
            raise DomainError("weights must be symmetric")


def vertex_set(members, n=None) -> np.ndarray:
    """Validate ``members`` as a duplicate-free set of vertex indices."""
    v = np.asarray(members, dtype=np.int64).ravel()
    if np.unique(v).size != v.size:
        raise DomainError("vertex set contains duplicates")
    if n is not None and v.size and (v.min() < 0 or v.max() >= n):
        raise DomainError(f"vertex index out of range [0, {n})")
    return v


def _check_pair(g, x, y):
    x = vertex_set(x, g.n)
    y = vertex_set(y, g.n)
    if x.size == 0 or y.size == 0:
        raise DomainError("density is undefined for an empty vertex set")
    if np.intersect1d(x, y, assume_unique=True).size:
        raise DomainError("vertex sets must be disjoint")
    return x, y


def edge_density(g: WeightedGraph, x, y) -> float:
    """Weighted density ``sum w(i, j) / (|x| |y|)`` over ``i in x, j in y``.

    On 0/1 graphs this is the plain edge count ratio. The summation order is
    canonicalised so that swapping ``x`` and ``y`` gives a bit-identical result.
    """
    x, y = _check_pair(g, x, y)
    x = np.sort(x)
    y = np.sort(y)
    if x[0] > y[0]:
        x, y = y, x
    total = g.weights[np.ix_(x, y)].sum()
    return float(total / (x.size * y.size))


def class_densities(g: WeightedGraph, classes) -> np.ndarray:
    """k x k matrix of pairwise class densities; the diagonal is left at 0.

    One pass over the rows of each class, so the cost is O(n^2) overall
    rather than O(k^2) separate submatrix extractions.
    """
    classes = [np.asarray(c, dtype=np.int64) for c in classes]
    k = len(classes)
    sizes = np.array([c.size for c in classes], dtype=np.float64)
    if k == 0:
        return np.zeros((0, 0))
    order = np.concatenate(classes)
    starts = np.concatenate([[0], np.cumsum(sizes[:-1])]).astype(np.int64)
    sums = np.empty((k, k))
    for s, members in enumerate(classes):
        col_sums = g.weights[members].sum(axis=0)
        sums[s] = np.add.reduceat(col_sums[order], starts)
    dens = sums / np.outer(sizes, sizes)
    upper = np.triu(dens, k=1)
    return upper + upper.T


def average_degree(g: WeightedGraph, a, b) -> float:
    """Average degree of the bipartite graph between equal-size sides a and b.

    Degrees count weight towards the opposite side only, so the mean over
    ``a | b`` equals ``e(a, b) / n``.
    """
    a, b = _check_pair(g, a, b)
    if a.size != b.size:
        raise DomainError(f"sides must have equal size, got {a.size} and {b.size}")
    block = g.weights[np.ix_(a, b)]
    n = a.size
    return float((block.sum(axis=1).sum() + block.sum(axis=0).sum()) / (2 * n))


def load_edge_list(path, n: int) -> WeightedGraph:
    """Read ``u v w`` lines (0-indexed, '#' comments) into an n-vertex graph.

    Unlisted pairs weigh 0; a repeated pair keeps the last weight seen.
    """
    if n < 0:
        raise DomainError("vertex count must be non-negative")
    w = np.zeros((n, n), dtype=np.float64)
    path = Path(path)
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"expected 'u v w', got {raw.strip()!r}", lineno, path)
            try:
                u, v = int(parts[0]), int(parts[1])
                weight = float(parts[2])
            except ValueError:
                raise ParseError(f"cannot parse {raw.strip()!r}", lineno, path) from None
            if not (0 <= u < n and 0 <= v < n):
                raise ParseError(f"vertex index out of range [0, {n})", lineno, path)
            if u == v:
                raise ParseError(f"self-loop on vertex {u} rejected", lineno, path)
            if not (0.0 <= weight <= 1.0):
                raise ParseError(f"weight {weight} outside [0, 1]", lineno, path)
            w[u, v] = w[v, u] = weight
    return WeightedGraph._wrap(w)


def save_edge_list(g: WeightedGraph, path, header=None):
    """Write the nonzero upper-triangle entries as ``u v w`` lines."""
    iu, ju = np.nonzero(np.triu(g.weights, k=1))
    with Path(path).open("w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v in zip(iu.tolist(), ju.tolist()):
            fh.write(f"{u} {v} {float(g.weights[u, v])!r}\n")


@dataclass(frozen=True)
class ImageGrid:
    """Grayscale image, row-major, intensities normalised to [0, 1]."""

    width: int
    height: int
    intensities: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.intensities, dtype=np.float64).ravel()
        if self.width < 1 or self.height < 1:
            raise DomainError("image dimensions must be positive")
        if values.size != self.width * self.height:
            raise DomainError(
                f"{values.size} intensities for a {self.width}x{self.height} image"
            )
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise DomainError("intensities must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "intensities", values)

    @property
    def n(self) -> int:
        return self.width * self.height

    @classmethod
    def from_array(cls, pixels):
        """Build from a 2-D (height, width) array already scaled to [0, 1]."""
        pixels = np.asarray(pixels, dtype=np.float64)
        if pixels.ndim != 2:
            raise DomainError("expected a 2-D array of intensities")
        h, w = pixels.shape
        return cls(w, h, pixels.ravel())

    def as_array(self) -> np.ndarray:
        return self.intensities.reshape(self.height, self.width)


def similarity_graph(img: ImageGrid, sigma: float) -> WeightedGraph:
    """Complete pixel graph with ``w(i, j) = exp(-(I(i) - I(j))^2 / sigma^2)``."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    values = img.intensities
    n = values.size
    w = np.empty((n, n), dtype=np.float64)
    scale = 1.0 / (sigma * sigma)
    for start in range(0, n, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, n)
        block = w[start:stop]
        np.subtract(values[start:stop, None], values[None, :], out=block)
        np.square(block, out=block)
        block *= -scale
        np.exp(block, out=block)
    np.fill_diagonal(w, 0.0)
    return WeightedGraph._wrap(w)


_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_header(data):
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise ParseError("truncated PGM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_pgm_raw(path):
    """Return ``(levels, maxval)`` where ``levels`` is a (height, width) int array."""
    path = Path(path)
    data = path.read_bytes()
    tokens, pos = _pgm_header(data)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ParseError(f"unsupported PGM magic {magic!r}", path=path)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError("non-integer PGM header field", path=path) from None
    if width < 1 or height < 1 or not (1 <= maxval <= 65535):
        raise ParseError(f"invalid PGM header {width}x{height} maxval={maxval}", path=path)
    count = width * height
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[pos : pos + count * dtype.itemsize]
        if len(raw) != count * dtype.itemsize:
            raise ParseError("truncated PGM pixel data", path=path)
        levels = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        body = re.sub(rb"#[^\n]*", b"", data[pos:]).split()
        if len(body) < count:
            raise ParseError("truncated PGM pixel data", path=path)
        levels = np.array([int(t) for t in body[:count]], dtype=np.int64)
    if levels.max(initial=0) > maxval:
        raise ParseError("pixel value exceeds maxval", path=path)
    return levels.reshape(height, width), maxval


def read_pgm(path) -> ImageGrid:
    """Load a P2 or P5 PGM; intensities are divided by maxval."""
    levels, maxval = read_pgm_raw(path)
    return ImageGrid.from_array(levels / maxval)


def write_pgm(path, levels, maxval=255, binary=True):
    """Write integer gray levels of shape (height, width)."""
    levels = np.asarray(levels)
    if levels.ndim != 2:
        raise DomainError("expected a 2-D array of gray levels")
    if levels.size and (levels.min() < 0 or levels.max() > maxval):
        raise DomainError("gray level outside [0, maxval]")
    h, w = levels.shape
    with Path(path).open("wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
            dtype = ">u2" if maxval > 255 else "u1"
            fh.write(levels.astype(dtype).tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n{maxval}\n".encode())
            for row in levels:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode())


def image_to_pgm(path, img: ImageGrid, maxval=255, binary=True):
    levels = np.rint(img.as_array() * maxval).astype(np.int64)
    write_pgm(path, levels, maxval=maxval, binary=binary)
