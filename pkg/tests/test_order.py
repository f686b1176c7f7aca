from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab import expansion as ex
from hclab import graphs as gr
from hclab import hardcore as hc
from hclab import order as od


def _plain_phi(g, sigma):
    """Majority field by hand; ties go to 1."""
    phi = {}
    for v in g.even:
        phi[v] = int(all(not (sigma >> u) & 1 for u in g.adjacency[v]))
    for u in g.odd:
        phi[u] = int(2 * sum(phi[w] for w in g.adjacency[u]) >= g.degree)
    return phi


def test_coarse_field_matches_hand_computation():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    rng = np.random.default_rng(0)
    configs = hc.enumerate_configs(g)
    for sigma in rng.choice(configs, 50).tolist():
        cf = od.coarse_field(g, sigma)
        phi = _plain_phi(g, sigma)
        assert all(cf.phi(v) == phi[v] for v in range(g.n))
        disagree = sum(phi[u] != phi[v] for u, v in g.edges)
        assert od.roughness(g, sigma) == Fraction(disagree, g.num_edges)


def test_empty_config_is_flat():
    g = gr.cycle(6)
    assert od.roughness(g, 0) == 0
    assert od.coarse_field(g, 0).mask == (1 << g.n) - 1


def test_single_odd_vertex():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    v = g.odd[0]
    assert od.roughness(g, 1 << v) == Fraction(3, 8)
    r = od.roughness_arrays(g, [1 << v])
    assert int(r.min_sum[0]) == 12


def test_tie_goes_to_one():
    # on C_6 occupying vertex 1 vacates phi at 0 and 2; odd 3 and 5 then see one 1 of two
    g = gr.cycle(6)
    cf = od.coarse_field(g, 1 << 1)
    assert [cf.phi(v) for v in (0, 2, 4)] == [0, 0, 1]
    for u in (3, 5):
        assert cf.phi_hat(u) == Fraction(1, 2) and cf.phi(u) == 1
    assert cf.phi(1) == 0


def test_phi_hat_is_average():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    sigma = 1 << g.odd[0]
    cf = od.coarse_field(g, sigma)
    for u in g.odd:
        assert cf.phi_hat(u) == Fraction(sum(cf.phi(w) for w in g.adjacency[u]), 4)


def test_occupation():
    g = gr.cycle(6)
    sigma = (1 << g.even[0]) | (1 << g.even[1])
    s = od.occupation(g, sigma)
    assert (s.even, s.odd, s.total, s.M) == (2, 0, 2, 0)


def test_M_le_Phi_exhaustive_Z4_squared():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    configs = hc.enumerate_configs(g)
    h = ex.cheeger_exact(g).value
    r = od.check_M_le_Phi(g, configs, h)
    assert r.passed and r.details["violations"] == 0 and r.details["configs"] == 743
    assert od.check_M_le_Phi_internals(g, configs).passed


@pytest.mark.parametrize("L,d", [(4, 1), (6, 1), (2, 3)])
def test_M_le_Phi_other_tori(L, d):
    g = gr.build_torus(gr.TorusSpec(L, d))
    configs = hc.enumerate_configs(g)
    assert od.check_M_le_Phi(g, configs, ex.cheeger_exact(g).value).passed


def test_M_le_Phi_fails_with_too_large_h():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    r = od.check_M_le_Phi(g, hc.enumerate_configs(g), 100)
    assert not r.passed and r.details["violations"] > 0
    with pytest.raises(ValueError):
        od.check_M_le_Phi(g, [0], 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_roughness_formulas_agree_on_random_graphs(seed):
    rng = np.random.default_rng(seed)
    g = gr.random_regular_bipartite(5, 3, rng)
    configs = hc.enumerate_configs(g)
    r = od.roughness_arrays(g, configs)
    assert np.array_equal(r.disagreements * g.n * g.degree, 2 * r.min_sum * g.num_edges)


def test_bad_event_torus():
    spec = gr.TorusSpec(4, 2)
    g = gr.build_torus(spec)
    # threshold L^3 / 2^C0; with C0 = 6 it is 1
    full_even = g.even_mask
    bad = od.bad_event_torus([0, full_even], spec, 1.0, 6.0, g)
    # |sigma| = 0 is 4 away from the mean 4; 8 even sites is 4 away as well
    assert bad.tolist() == [True, True]
    assert not od.bad_event_torus([0b101], spec, 1.0, 0.0, g).any()
    with pytest.raises(ValueError):
        od.bad_event_torus([0], gr.TorusSpec(3, 2), 1.0, 1.0)


def test_balanced_event():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    # threshold 0.1 * 1/2 * 16 = 0.8, so one vertex on each side suffices
    e, o = g.even[0], next(u for u in g.odd if u not in g.adjacency[g.even[0]])
    assert od.balanced_event([(1 << e) | (1 << o)], g, 1.0).tolist() == [True]
    assert od.balanced_event([1 << e], g, 1.0).tolist() == [False]
