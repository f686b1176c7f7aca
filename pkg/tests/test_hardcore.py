import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab import graphs as gr
from hclab import hardcore as hc

# independence polynomials counted by a separate plain-Python enumeration
POLY = {
    (4, 1): [1, 4, 2],
    (6, 1): [1, 6, 9, 2],
    (2, 3): [1, 8, 16, 8, 2],
    (4, 2): [1, 16, 88, 208, 228, 128, 56, 16, 2],
}


@pytest.mark.parametrize("key", sorted(POLY))
def test_independence_polynomial(key):
    g = gr.build_torus(gr.TorusSpec(*key))
    p = hc.independence_polynomial(g)
    assert list(p[: len(POLY[key])]) == POLY[key]
    assert all(c == 0 for c in p[len(POLY[key]) :])


def test_Z_K2_symbolic():
    for lam in (Fraction(1, 3), Fraction(2), Fraction(7, 5)):
        assert hc.partition_bruteforce(gr.complete_bipartite(1, 1), lam).exact == 1 + 2 * lam


def test_Z_torus_4_1_is_7():
    res = hc.partition_bruteforce(gr.build_torus(gr.TorusSpec(4, 1)), 1)
    assert res.exact == 7
    assert math.isclose(res.log_z, math.log(7), rel_tol=1e-15)


def test_Q4_equals_Z4_squared():
    a = hc.independence_polynomial(gr.hypercube(4))
    b = hc.independence_polynomial(gr.build_torus(gr.TorusSpec(4, 2)))
    assert list(a) == list(b)


@pytest.mark.parametrize("L,d", [(3, 1), (5, 1), (3, 2), (4, 2), (6, 2), (2, 4)])
def test_transfer_matches_bruteforce(L, d):
    spec = gr.TorusSpec(L, d)
    g = gr.build_torus(spec)
    for lam in (0.5, 1.0, 2.0):
        a = hc.partition_transfer_torus(spec, lam).log_z
        b = hc.partition_bruteforce(g, lam).log_z
        assert abs(a - b) <= 1e-10


def test_enumeration_cap():
    with pytest.raises(ValueError):
        hc.enumerate_configs(gr.build_torus(gr.TorusSpec(7, 2)))


def test_configs_are_independent():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    c = hc.enumerate_configs(g)
    assert len(c) == 743 and len(set(c.tolist())) == 743
    assert hc.independent_mask(g, c).all()


def test_exact_distribution_normalised():
    mu = hc.exact_distribution(gr.cycle(6), 2.0)
    assert abs(mu.probs.sum() - 1) < 1e-12
    probs = hc.exact_probabilities(gr.cycle(4), Fraction(1))
    assert sum(probs.values()) == 1 and probs[0] == Fraction(1, 7)


def test_trivial_lower_bound():
    r = hc.trivial_lower_bound_check(gr.build_torus(gr.TorusSpec(4, 2)), 1)
    assert r.passed and r.lhs == 256


def test_glauber_transition_rows_are_stochastic():
    g = gr.cycle(4)
    lam = Fraction(3, 2)
    for s in hc.enumerate_configs(g).tolist():
        out = sum(hc.glauber_transition(g, lam, s, s ^ (1 << v)) for v in range(g.n))
        assert out <= 1


def test_detailed_balance_exact():
    for lam in (Fraction(1, 2), 1, 3):
        assert hc.detailed_balance_check(gr.cycle(4), lam).passed


def test_glauber_reproducible():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    a = hc.glauber_run(g, 1.0, 5000, seed=3)
    b = hc.glauber_run(g, 1.0, 5000, seed=3)
    assert a == b and hc.is_independent(g, a)


def test_glauber_batch_states_independent():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    s = hc.glauber_batch(g, 2.0, 50, 300, seed=1)
    assert hc.independent_mask(g, s).all()


def test_glauber_marginals_statistical():
    # a statistical check at a fixed seed
    r = hc.glauber_marginals_check(gr.complete_bipartite(1, 1), 1.0, 200_000, seed=2)
    assert r.passed


def test_split_seed_is_deterministic():
    a = [r.integers(1 << 30) for r in hc.split_seed(5, 3)]
    b = [r.integers(1 << 30) for r in hc.split_seed(5, 3)]
    assert a == b and len(set(a)) == 3


def test_fixed_size_sampler():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    s = hc.sample_fixed_size(g, 3, 2000, seed=1)
    assert hc.is_independent(g, s) and s.bit_count() == 3
    assert len(hc.fixed_size_configs(g, 2)) == 88


def test_zeta_exact_and_float():
    g = gr.cycle(4)
    c = hc.enumerate_configs(g)
    ones = np.ones(len(c), dtype=np.int64)
    assert hc.zeta(ones, c, Fraction(1)) == 7
    assert math.isclose(float(hc.zeta(ones, c, 2.0, exact=False)), 1 + 4 * 2 + 2 * 4)


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(1, 10), max_value=Fraction(10), max_denominator=20))
def test_Z_cycle6_is_polynomial(lam):
    assert hc.partition_bruteforce(gr.cycle(6), lam).exact == 1 + 6 * lam + 9 * lam**2 + 2 * lam**3
