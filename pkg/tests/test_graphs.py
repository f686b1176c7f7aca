import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab import graphs as gr


def test_torus_degree_and_size():
    for L, d in [(2, 1), (2, 3), (3, 2), (4, 2), (6, 1)]:
        g = gr.build_torus(gr.TorusSpec(L, d))
        assert g.n == L**d
        assert g.degree == gr.TorusSpec(L, d).degree
        assert g.is_connected()


def test_even_torus_is_bipartite_and_balanced():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    assert len(g.even) == len(g.odd) == 8
    for u, v in g.edges:
        assert g.parity[u] != g.parity[v]


def test_odd_torus_has_no_bipartition():
    g = gr.build_torus(gr.TorusSpec(3, 1))
    assert g.parity is None
    assert gr.two_coloring(g) is None


def test_Z2_torus_is_hypercube():
    a = gr.build_torus(gr.TorusSpec(2, 3))
    b = gr.hypercube(3)
    assert sorted(a.edges) == sorted(b.edges)


def test_row_major_indexing():
    assert gr.torus_index((1, 2), 4) == 1 * 4 + 2
    assert gr.torus_coords(6, 4, 2) == (1, 2)


def test_rejects_bad_adjacency():
    with pytest.raises(ValueError):
        gr.BipartiteGraph(((1,), ()))
    with pytest.raises(ValueError):
        gr.BipartiteGraph.from_edges(2, [(0, 1)], [0, 0])


def test_file_round_trip(tmp_path):
    g = gr.build_torus(gr.TorusSpec(4, 2))
    path = tmp_path / "g.txt"
    gr.save_graph(g, path)
    h = gr.load_graph(path)
    assert h.adjacency == g.adjacency and h.parity == g.parity
    assert path.read_text().splitlines()[0] == "n 16 delta 4"


@pytest.mark.parametrize(
    "text",
    [
        "n 2 delta 1\nparity EO\n0 0\n",
        "n 2 delta 1\nparity EE\n0 1\n",
        "n 3 delta 1\nparity EOE\n0 1\n",
        "n two\n",
    ],
)
def test_file_errors(text):
    with pytest.raises(gr.GraphFormatError):
        gr.loads_graph(text)


def test_automorphism_count_and_validity():
    spec = gr.TorusSpec(4, 2)
    g = gr.build_torus(spec)
    edges = set(g.edges)
    auts = list(gr.all_torus_automorphisms(spec))
    # translations times signed coordinate permutations
    assert len(auts) == 16 * 8
    for a in auts[:20]:
        for u, v in g.edges:
            x, y = a.apply(u), a.apply(v)
            assert (min(x, y), max(x, y)) in edges


def test_hamming_code_is_perfect():
    code = gr.hamming_code(3)
    assert len(code) == 16
    words = [tuple((w >> i) & 1 for i in range(7)) for w in range(128)]
    for w in words:
        assert sum(1 for c in code if sum(a != b for a, b in zip(w, c)) <= 1) == 1


@pytest.mark.parametrize("L,d", [(2, 2), (4, 2), (6, 1), (3, 3), (5, 2), (2, 5), (4, 3)])
def test_dominating_set_and_tree(L, d):
    spec = gr.TorusSpec(L, d)
    g = gr.build_torus(spec)
    D = gr.dominating_set_torus(spec)
    assert gr.is_dominating(g, D)
    assert len(D) * d < 2 * spec.n
    T = gr.dominating_tree(g, D)
    assert len(T.vertices) <= 3 * len(D)
    assert set(D) <= set(T.vertices)
    for u, v in T.edges:
        assert v in g.adjacency[u]


def test_linear_gadget_shape():
    gad = gr.build_linear_gadget(2)
    g = gad.graph
    assert g.n == 14
    assert len(g.adjacency[gad.left]) == len(g.adjacency[gad.right]) == 1
    assert all(len(g.adjacency[v]) == 3 for v in range(g.n) if v not in (gad.left, gad.right))
    assert gr.two_coloring(g) is not None


def test_blow_up_and_stretch():
    g = gr.cycle(4)
    b = gr.blow_up(g, 3)
    assert b.n == 12 and b.degree == 6 and b.num_edges == 9 * g.num_edges
    s = gr.stretch_by_gadget(gr.complete_bipartite(2, 2), 1)
    assert s.n == 4 + 4 * 6
    assert s.parity is not None


@settings(max_examples=30, deadline=None)
@given(half=st.integers(2, 8), data=st.data(), seed=st.integers(0, 2**32 - 1))
def test_random_regular_bipartite(half, data, seed):
    deg = data.draw(st.integers(2, half))
    g = gr.random_regular_bipartite(half, deg, np.random.default_rng(seed))
    assert g.n == 2 * half and g.degree == deg and g.is_connected()
    assert all(g.parity[u] != g.parity[v] for u, v in g.edges)


def test_random_regular_bipartite_rejects_one_regular():
    with pytest.raises(ValueError):
        gr.random_regular_bipartite(3, 1, np.random.default_rng(0))


def test_atomic_write(tmp_path):
    p = tmp_path / "x.txt"
    gr.write_text_atomic(p, "a\n")
    gr.write_text_atomic(p, "b\n")
    assert p.read_text() == "b\n"
    assert list(tmp_path.iterdir()) == [p]
