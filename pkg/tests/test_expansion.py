from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab import expansion as ex
from hclab import graphs as gr


def test_cheeger_small_graphs():
    r = ex.cheeger_exact(gr.cycle(4))
    assert r.value == 1 and len(r.witness) == 2
    u, v = r.witness
    assert v in gr.cycle(4).adjacency[u]
    assert ex.cheeger_exact(gr.complete_bipartite(1, 1)).value == 1
    assert ex.cheeger_exact(gr.cycle(6)).value == Fraction(2, 3)


def test_cheeger_Z4_squared():
    # independent brute force over all 2^16 subsets gives 1
    r = ex.cheeger_exact(gr.build_torus(gr.TorusSpec(4, 2)))
    assert r.value == 1 >= Fraction(1, 4)


@pytest.mark.parametrize("L,d", [(2, 1), (4, 1), (6, 1), (2, 2), (4, 2)])
def test_cheeger_at_least_one_over_L(L, d):
    spec = gr.TorusSpec(L, d)
    assert ex.cheeger_exact(gr.build_torus(spec)).value >= ex.torus_cheeger_bound(spec)


def test_cheeger_slice_transfer_matches_exhaustion():
    for L, d in [(4, 2), (6, 1), (3, 2), (4, 1)]:
        spec = gr.TorusSpec(L, d)
        assert ex.cheeger_torus_transfer(spec).value == ex.cheeger_exact(gr.build_torus(spec)).value
    with pytest.raises(ValueError):
        ex.cheeger_torus_transfer(gr.TorusSpec(2, 3))


def test_cheeger_cap():
    with pytest.raises(ValueError):
        ex.cheeger_exact(gr.build_torus(gr.TorusSpec(5, 2)))


def test_torus_bound_values():
    assert ex.torus_cheeger_bound(gr.TorusSpec(6, 3)) == Fraction(1, 6)
    assert ex.torus_cheeger_bound(gr.TorusSpec(2, 5)) == Fraction(1, 2)


@pytest.mark.parametrize("L,d,M", [(4, 2, 48), (2, 3, 16)])
def test_torus_certificate(L, d, M):
    spec = gr.TorusSpec(L, d)
    cert = ex.torus_local_expansion_certificate(spec)
    assert (cert.C_LE, cert.M_LE) == (12, M)
    r = ex.verify_local_expansion(gr.build_torus(spec), cert)
    assert r.passed
    # item 2 probability is one: V(T) dominates
    assert all(p == 1 for p in cert.source.cover_probabilities())


def test_uniform_edge_certificate():
    g = gr.cycle(6)
    cert = ex.LocalExpansionCertificate(Fraction(1), Fraction(1), ex.uniform_edge_source(g))
    assert ex.verify_local_expansion(g, cert).passed


def test_certificate_falsified():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    good = ex.torus_local_expansion_certificate(gr.TorusSpec(4, 2))
    bad = ex.LocalExpansionCertificate(good.C_LE, Fraction(1), good.source)
    r = ex.verify_local_expansion(g, bad)
    assert not r.passed and "local-expansion:item1" in r.witness


def test_montecarlo_mode_agrees():
    spec = gr.TorusSpec(4, 2)
    cert = ex.torus_local_expansion_certificate(spec)
    assert ex.verify_local_expansion(gr.build_torus(spec), cert, mode="montecarlo", samples=500, seed=1).passed


def test_green_table_C4():
    t = ex.green_table(gr.cycle(4), 2, exact=True)
    assert t.value(0, 0) == 1
    assert t.value(0, 1) == Fraction(1, 2) and t.value(0, 3) == Fraction(1, 2)
    assert t.value(0, 2) == 0
    assert ex.check_green_positivity(t, gr.cycle(4)).passed


def test_green_table_matches_matrix_powers():
    g = gr.hypercube(3)
    t = ex.green_table(g, 5, exact=True)
    P = np.array([[1 / 3 if v in g.adjacency[u] else 0 for v in range(8)] for u in range(8)])
    G = sum(np.linalg.matrix_power(P, i) for i in range(5))
    exact = np.array([[float(t.value(u, v)) for v in range(8)] for u in range(8)])
    assert np.allclose(exact, G, atol=1e-14)
    assert np.allclose(exact.sum(axis=1), 5)
    assert np.allclose(exact, exact.T)


@settings(max_examples=40, deadline=None)
@given(half=st.integers(2, 8), data=st.data(), seed=st.integers(0, 2**32 - 1))
def test_green_positivity_random(half, data, seed):
    deg = data.draw(st.integers(2, half))
    M0 = data.draw(st.integers(1, 8))
    g = gr.random_regular_bipartite(half, deg, np.random.default_rng(seed))
    assert ex.check_green_positivity(ex.green_table(g, M0, exact=True), g).passed


def test_green_positivity_fixed_examples():
    assert ex.check_green_positivity(ex.green_table(gr.hypercube(3), 4, exact=True), gr.hypercube(3)).passed
    g = gr.random_regular_bipartite(6, 3, np.random.default_rng(12))
    assert ex.check_green_positivity(ex.green_table(g, 6, exact=True), g).passed


def test_walk_certificate():
    cert, rep = ex.local_expansion_from_walk(gr.cycle(4), 2, 1)
    assert rep.passed and cert.M_LE == 2 and cert.C_LE == 1
    cert, rep = ex.local_expansion_from_walk(gr.hypercube(3), 2, 1)
    assert rep.passed
    with pytest.raises(ex.PremiseError):
        ex.local_expansion_from_walk(gr.cycle(4), 4, 1)


def test_path_vert_C4_bound_is_tight():
    r = ex.path_vert_check(gr.cycle(4), 2, 1)
    assert r.passed and r.lhs == 1 and r.rhs == 1


def test_wilson_interval():
    lo, hi = ex.wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert ex.wilson_interval(0, 0) == (0.0, 1.0)
