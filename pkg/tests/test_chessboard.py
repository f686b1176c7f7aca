import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from hclab import chessboard as cb
from hclab import graphs as gr
from hclab import hardcore as hc


def test_group_size_and_spec_validation():
    spec = cb.ReflectionGroupSpec(1, 4, 2)
    els = cb.group_elements(spec)
    assert len(els) == spec.order == 16
    assert len({tuple(t.perm) for t in els}) == 16
    with pytest.raises(ValueError):
        cb.ReflectionGroupSpec(2, 6, 1)
    with pytest.raises(ValueError):
        cb.ReflectionGroupSpec(0, 4, 1)


def test_group_elements_are_graph_automorphisms():
    spec = cb.ReflectionGroupSpec(1, 4, 2)
    g = gr.build_torus(spec.torus)
    edges = set(g.edges)
    for t in cb.group_elements(spec):
        for u, v in g.edges:
            a, b = int(t.perm[u]), int(t.perm[v])
            assert (min(a, b), max(a, b)) in edges


@pytest.mark.parametrize("ell,L,d", [(1, 4, 1), (1, 4, 2), (3, 6, 1), (1, 6, 2), (2, 8, 1)])
def test_tau_s_is_unique(ell, L, d):
    spec = cb.ReflectionGroupSpec(ell, L, d)
    for s in itertools.product(range(spec.per_axis), repeat=d):
        assert cb.tau_s_unique(spec, s)


def test_tau_s_moves_the_block():
    spec = cb.ReflectionGroupSpec(1, 6, 1)
    # s = 1 is a reflection taking {0, 1} onto {2, 1}
    t = cb.tau_s(spec, (1,))
    assert t.axes[0][0] == "ref"
    assert {t.apply(0), t.apply(1)} == {1, 2}
    assert cb.tau_s(spec, (0,)).is_identity()


def test_weights_and_stabilizers():
    assert cb.weight((0, 0), 1) == Fraction(1, 4)
    assert cb.weight((0, 2), 3) == Fraction(1, 2)
    assert cb.weight((1, 2), 3) == 1
    assert cb.weight((4,), 3) == 0
    for ell, L, d in [(1, 4, 1), (3, 6, 1), (1, 4, 2), (3, 6, 2)]:
        spec = cb.ReflectionGroupSpec(ell, L, d)
        for x in cb.block_sites(spec):
            assert 1 / cb.weight(x, ell) == cb.stabilizer_size(spec, x)


def test_sums_identity_on_whole_torus():
    spec = cb.ReflectionGroupSpec(1, 4, 2)
    V = range(16)
    rng = np.random.default_rng(3)
    configs = hc.enumerate_configs(gr.build_torus(spec.torus))
    for sigma in rng.choice(configs, 20).tolist():
        assert cb.check_sums_identity(sigma, V, spec).passed


def test_sums_identity_on_even_sublattice():
    spec = cb.ReflectionGroupSpec(3, 6, 1)
    even = [v for v in range(6) if v % 2 == 0]
    assert cb.is_invariant(even, spec)
    assert cb.check_sums_identity(0b010101, even, spec).passed


def test_sums_identity_rejects_non_invariant_set():
    spec = cb.ReflectionGroupSpec(1, 4, 1)
    with pytest.raises(ValueError):
        cb.check_sums_identity(1, [0], spec)


def test_norm_of_one():
    # ||1||^|G| = Z: 7 on Z_4 and 18 on Z_6 at lam = 1
    n4 = cb.chessboard_seminorm(cb.constant_observable(cb.ReflectionGroupSpec(1, 4, 1)), 1)
    n6 = cb.chessboard_seminorm(cb.constant_observable(cb.ReflectionGroupSpec(1, 6, 1)), 1)
    assert math.isclose(n4, 7**0.25, rel_tol=1e-12)
    assert math.isclose(n6, 18 ** (1 / 6), rel_tol=1e-12)
    assert n6 <= n4


def test_site_indicator_norm():
    # the orbit of the origin is {0,2}^2; occupying it leaves 4 even sites free
    spec = cb.ReflectionGroupSpec(1, 4, 2)
    assert math.isclose(cb.chessboard_seminorm(cb.site_indicator(spec), 1), 2**0.25, rel_tol=1e-12)


def test_disseminated_integral_exact():
    spec = cb.ReflectionGroupSpec(1, 4, 1)
    assert cb.disseminated_integral(cb.constant_observable(spec), Fraction(1)) == 7


def test_chessboard_estimate_random():
    rng = np.random.default_rng(7)
    for ell, L, d in [(1, 4, 1), (1, 6, 1), (1, 4, 2)]:
        spec = cb.ReflectionGroupSpec(ell, L, d)
        for _ in range(3):
            fs = [cb.random_observable(spec, rng) for _ in range(spec.order)]
            assert cb.check_chessboard_estimate(fs, 1.0).passed


def test_seminorm_properties():
    rng = np.random.default_rng(0)
    r = cb.check_seminorm_properties(cb.ReflectionGroupSpec(1, 4, 1), 1.5, rng, pairs=10)
    assert r.passed


def test_negative_integral_raises():
    with pytest.raises(cb.ReflectionPositivityError):
        cb._root(-1.0, 4)
    assert cb._root(0.0, 4) == 0.0
    assert cb._root(-1e-14, 4) == 0.0


def test_torus_comparison_and_trace_route():
    spec = cb.ReflectionGroupSpec(1, 4, 1)
    f = cb.random_observable(spec, np.random.default_rng(2))
    r = cb.seminorm_torus_comparison(f, 1.0)
    assert r.passed
    assert math.isclose(cb.trace_route(cb.constant_observable(spec), 1.0, 4), 7, rel_tol=1e-12)


def test_phase_observable_on_C6_is_zero():
    # with ell = L/2 the block covers half the cycle and every pattern is bad
    phase = cb.phase_observable(cb.ReflectionGroupSpec(3, 6, 1), 1)
    assert (phase.f == 0).all()
    assert cb.check_separator(phase).passed
    assert cb.check_f_expectation_zero(phase).passed


@pytest.mark.parametrize("ell,L,d,lam", [(1, 4, 1, 1), (1, 4, 2, 2), (1, 6, 1, Fraction(1, 2))])
def test_separator_and_symmetry(ell, L, d, lam):
    phase = cb.phase_observable(cb.ReflectionGroupSpec(ell, L, d), lam)
    assert cb.check_separator(phase).passed
    r = cb.check_f_expectation_zero(phase)
    assert r.passed
    dist = cb.f_distribution(phase)
    assert dist[1] == dist[-1] and sum(dist.values()) == 1


def test_sign_of_zero_is_zero():
    # the empty pattern is balanced
    phase = cb.phase_observable(cb.ReflectionGroupSpec(1, 4, 1), 1)
    assert phase.g[0] == 0


def test_phase_needs_odd_ell():
    with pytest.raises(ValueError):
        cb.phase_observable(cb.ReflectionGroupSpec(2, 8, 1), 1)


def test_contour_chain():
    phase = cb.phase_observable(cb.ReflectionGroupSpec(1, 4, 2), 1)
    assert cb.contour_probability_chain(phase, [(0, 0)]).passed
    assert cb.contour_probability_chain(phase, [(0, 0), (1, 1)]).passed
