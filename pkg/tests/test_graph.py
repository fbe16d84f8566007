import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import density
from regulith.errors import DomainError, ParseError
from regulith.graph import (
    ImageGrid,
    WeightedGraph,
    average_degree,
    class_densities,
    edge_density,
    load_edge_list,
    read_pgm,
    read_pgm_raw,
    save_edge_list,
    similarity_graph,
    write_pgm,
)


def bipartite(n, cross):
    """2n vertices, a = 0..n-1, b = n..2n-1, cross block given."""
    w = np.zeros((2 * n, 2 * n))
    w[:n, n:] = cross
    w[n:, :n] = np.asarray(cross).T
    return WeightedGraph(w)


def test_rejects_asymmetric_and_loops():
    with pytest.raises(DomainError):
        WeightedGraph([[0, 1], [0, 0]])
    with pytest.raises(DomainError):
        WeightedGraph([[0.5, 0], [0, 0]])
    with pytest.raises(DomainError):
        WeightedGraph([[0, 1.5], [1.5, 0]])
    with pytest.raises(DomainError):
        WeightedGraph([[0, np.nan], [np.nan, 0]])


def test_weights_read_only():
    g = WeightedGraph(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        g.weights[0, 1] = 1.0


def test_density_examples():
    g = bipartite(2, np.ones((2, 2)))
    assert edge_density(g, [0, 1], [2, 3]) == 1.0
    g = bipartite(2, np.zeros((2, 2)))
    assert edge_density(g, [0, 1], [2, 3]) == 0.0
    g = bipartite(2, [[0.2, 0.4], [0.6, 0.8]])
    assert edge_density(g, [0, 1], [2, 3]) == pytest.approx(0.5, abs=1e-15)


def test_density_errors():
    g = WeightedGraph(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        edge_density(g, [], [1])
    with pytest.raises(DomainError):
        edge_density(g, [0, 1], [1, 2])
    with pytest.raises(DomainError):
        edge_density(g, [0, 0], [1])
    with pytest.raises(DomainError):
        edge_density(g, [0], [7])


def test_average_degree_examples():
    assert average_degree(bipartite(3, np.ones((3, 3))), [0, 1, 2], [3, 4, 5]) == 3.0
    assert average_degree(bipartite(3, np.zeros((3, 3))), [0, 1, 2], [3, 4, 5]) == 0.0
    assert average_degree(bipartite(3, np.eye(3)), [0, 1, 2], [3, 4, 5]) == 1.0
    with pytest.raises(DomainError):
        average_degree(bipartite(3, np.eye(3)), [0, 1], [3, 4, 5])


def test_class_densities_match_pairwise():
    rng = np.random.default_rng(3)
    w = rng.random((30, 30))
    w = np.triu(w, 1)
    g = WeightedGraph(w + w.T)
    classes = [np.arange(i * 7, i * 7 + 7) for i in range(4)]
    dens = class_densities(g, classes)
    for r in range(4):
        assert dens[r, r] == 0.0
        for s in range(4):
            if r != s:
                assert dens[r, s] == pytest.approx(density(g.weights, classes[r], classes[s]), abs=1e-14)


def test_edge_list_examples(tmp_path):
    f = tmp_path / "a.tsv"
    f.write_text("0 1 1.0\n")
    g = load_edge_list(f, 2)
    assert g.n == 2 and g.weights[0, 1] == 1.0 and g.weights[1, 0] == 1.0
    f.write_text("")
    g = load_edge_list(f, 3)
    assert g.n == 3 and not g.weights.any()
    f.write_text("0 0 0.5\n")
    with pytest.raises(ParseError, match="self-loop"):
        load_edge_list(f, 2)


def test_edge_list_errors_name_line(tmp_path):
    f = tmp_path / "a.tsv"
    f.write_text("# header\n0 1 0.5\n0 5 0.5\n")
    with pytest.raises(ParseError) as exc:
        load_edge_list(f, 3)
    assert exc.value.line == 3 and ":3:" in str(exc.value)
    f.write_text("0 1 1.5\n")
    with pytest.raises(ParseError, match="outside"):
        load_edge_list(f, 3)
    f.write_text("0 1\n")
    with pytest.raises(ParseError):
        load_edge_list(f, 3)


def test_edge_list_last_duplicate_wins_and_round_trip(tmp_path):
    f = tmp_path / "a.tsv"
    f.write_text("0 1 0.5  # first\n1 0 0.25\n1 2 0.125\n")
    g = load_edge_list(f, 3)
    assert g.weights[0, 1] == 0.25
    out = tmp_path / "b.tsv"
    save_edge_list(g, out, header="round trip")
    assert np.array_equal(load_edge_list(out, 3).weights, g.weights)


def test_similarity_examples():
    img = ImageGrid(3, 1, [0.2, 0.2, 0.7])
    g = similarity_graph(img, 0.5)
    assert g.weights[0, 1] == 1.0
    assert g.weights[0, 2] == pytest.approx(math.exp(-1.0), abs=1e-15)
    assert math.exp(-1) == pytest.approx(0.3679, abs=1e-4)
    assert np.all(np.diag(g.weights) == 0)
    flat = similarity_graph(ImageGrid(4, 2, np.full(8, 0.3)), 0.1)
    assert np.all(flat.weights + np.eye(8) == 1.0)
    with pytest.raises(DomainError):
        similarity_graph(img, 0.0)
    with pytest.raises(DomainError):
        similarity_graph(img, -1.0)


def test_image_grid_validation():
    with pytest.raises(DomainError):
        ImageGrid(2, 2, [0.1, 0.2, 0.3])
    with pytest.raises(DomainError):
        ImageGrid(1, 2, [0.1, 1.2])


@pytest.mark.parametrize("binary", [True, False])
@pytest.mark.parametrize("maxval", [255, 1000, 65535])
def test_pgm_round_trip(tmp_path, binary, maxval):
    rng = np.random.default_rng(maxval)
    levels = rng.integers(0, maxval + 1, size=(5, 7))
    path = tmp_path / "x.pgm"
    write_pgm(path, levels, maxval=maxval, binary=binary)
    back, mv = read_pgm_raw(path)
    assert mv == maxval and np.array_equal(back, levels)
    img = read_pgm(path)
    assert (img.width, img.height) == (7, 5)
    assert np.allclose(img.as_array(), levels / maxval)


def test_pgm_ascii_with_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P2\n# made by hand\n3 2\n# max\n4\n0 1 2\n3 4 # tail\n0\n")
    levels, mv = read_pgm_raw(path)
    assert mv == 4 and levels.tolist() == [[0, 1, 2], [3, 4, 0]]


def test_pgm_errors(tmp_path):
    path = tmp_path / "bad.pgm"
    path.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ParseError):
        read_pgm_raw(path)
    path.write_bytes(b"P5\n2 2\n255\n\x00")
    with pytest.raises(ParseError):
        read_pgm_raw(path)
    path.write_bytes(b"P2\n1 1\n3\n9\n")
    with pytest.raises(ParseError):
        read_pgm_raw(path)


# properties

def _random_graph(seed, n, binary):
    rng = np.random.default_rng(seed)
    w = rng.random((n, n))
    if binary:
        w = (w < 0.5).astype(float)
    w = np.triu(w, 1)
    return WeightedGraph(w + w.T)


@given(st.integers(0, 10_000), st.integers(4, 24), st.booleans(), st.data())
def test_density_symmetric_bounded(seed, n, binary, data):
    g = _random_graph(seed, n, binary)
    perm = np.random.default_rng(seed + 1).permutation(n)
    cut = data.draw(st.integers(1, n - 1))
    stop = data.draw(st.integers(cut + 1, n))
    x, y = perm[:cut], perm[cut:stop]
    d = edge_density(g, x, y)
    assert d == edge_density(g, y, x)
    assert 0.0 <= d <= 1.0
    if binary:
        edges = int(g.weights[np.ix_(x, y)].sum())
        assert d == edges / (len(x) * len(y))


@given(st.lists(st.floats(0, 1), min_size=2, max_size=30), st.floats(0.05, 2.0), st.integers(0, 1000))
def test_similarity_permutation_equivariant(values, sigma, seed):
    values = np.array(values)
    perm = np.random.default_rng(seed).permutation(values.size)
    g = similarity_graph(ImageGrid(values.size, 1, values), sigma)
    h = similarity_graph(ImageGrid(values.size, 1, values[perm]), sigma)
    assert np.array_equal(h.weights, g.weights[np.ix_(perm, perm)])
