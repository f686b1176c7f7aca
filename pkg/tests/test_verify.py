import math
from fractions import Fraction

import numpy as np
import pytest

from hclab import chessboard as cb
from hclab import expansion as ex
from hclab import graphs as gr
from hclab import hardcore as hc
from hclab import order as od
from hclab import verify as vf


def test_exposure_density_delta4():
    # 1 - (3/4)^4 - (3/4)^3 by hand
    assert vf.exposure_density(4) == Fraction(67, 256)
    for delta in range(2, 9):
        assert vf.exposure_density(delta) == vf.exposure_density_enumerated(delta)
    m, se = vf.exposure_density_montecarlo(4, 200_000, np.random.default_rng(0))
    assert abs(m - 67 / 256) < 5 * se
    with pytest.raises(ValueError):
        vf.exposure_density(1)


def test_default_scheme_density_matches():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    assert vf.default_scheme(g).s == Fraction(67, 256)
    assert vf.full_odd_scheme(g).s == 1


def test_scheme_rejects_bad_probabilities():
    g = gr.cycle(4)
    with pytest.raises(ValueError):
        vf.ExposureScheme(g, [(Fraction(1, 2), 0, g.odd_mask)])


def test_three_term_on_C4():
    g = gr.cycle(4)
    mu = hc.exact_distribution(g, 1.0)
    rng = np.random.default_rng(1)
    configs = hc.enumerate_configs(g)
    for d in [mu, vf.point_mass(0), vf.random_distribution(configs, rng)]:
        assert vf.three_term_check(g, d, 1.0).passed


def test_three_term_equality_with_full_odd_scheme():
    g = gr.complete_bipartite(2, 2)
    sch = vf.full_odd_scheme(g)
    for d in [hc.exact_distribution(g, 2.0), vf.point_mass(0)]:
        r = vf.three_term_check(g, d, 2.0, sch)
        assert r.passed and abs(float(r.margin)) < 1e-10


def test_gain_terms():
    for spec in (gr.TorusSpec(4, 1), gr.TorusSpec(2, 3)):
        g = gr.build_torus(spec)
        mu = hc.exact_distribution(g, 1.0)
        r = vf.gain_terms_check(g, mu, 1.0)
        assert r.passed
        assert r.details["T3"] <= 0


def test_two_neighbour_coupling():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    sch = vf.default_scheme(g)
    ok, val = vf.two_neighbour_coupling(sch, g.odd[0])
    assert ok and val == 1


def test_loss_term():
    spec = gr.TorusSpec(4, 2)
    g = gr.build_torus(spec)
    cert = ex.torus_local_expansion_certificate(spec)
    items = vf.exposure_items(vf.default_scheme(g))
    mu = hc.exact_distribution(g, 1.0)
    assert vf.loss_term_check(g, vf.phi_distribution(g, mu), items, cert).passed
    assert vf.loss_term_check(g, vf.iid_phi_distribution(g), items, cert).passed


def test_iid_phi_mean_roughness():
    g = gr.cycle(6)
    assert vf.mean_roughness_of_phi(g, vf.iid_phi_distribution(g, 0.3)) == pytest.approx(2 * 0.3 * 0.7)


def test_hoeffding():
    pt = vf.hoeffding_point(10, Fraction(1, 2), 5)
    assert pt.details["exact_lhs"] == Fraction(2, 1024) and pt.passed
    assert vf.hoeffding_check(30).passed
    assert vf.binomial_tail(4, Fraction(1, 2), 0) == 1


def test_weitz():
    assert vf.weitz_threshold(3) == 4
    assert vf.weitz_threshold(4) == Fraction(27, 16)
    assert abs(vf.weitz_asymptote(1000) - 1) < 0.01


def test_blowup_equivalence():
    for F in (gr.complete_bipartite(1, 1), gr.cycle(4)):
        for m in (2, 3):
            assert vf.blowup_equivalence_check(F, m, Fraction(1, 2)).passed


def test_bivariate_polynomial_of_C4():
    p = vf.bivariate_polynomial(gr.cycle(4))
    assert p[0, 0] == 1 and p[1, 0] == 2 and p[0, 1] == 2 and p[2, 0] == 1 and p[1, 1] == 0
    assert sum(p.flatten()) == 7


def test_gadget_reduction():
    assert vf.gadget_reduction_check(b=2, lams=(0.5, 1.0)).passed


def test_gadget_scan_vanishes_at_large_lambda():
    rows = vf.gadget_threshold_scan(3, [1.0, 10.0, 100.0, 1e3, 1e5])
    mus = [r["mu_balanced"] for r in rows]
    assert all(0 <= m <= 1 for m in mus)
    assert all(a > b for a, b in zip(mus, mus[1:]))
    assert mus[-1] < 1e-3
    with pytest.raises(ValueError):
        vf.gadget_threshold_scan(4, [1.0])


def test_free_energy_gap_values():
    r = vf.free_energy_gap(gr.TorusSpec(4, 1), 1.0)
    assert r.passed
    # log(7)/4 - log(2)/2
    assert r.details["gap"] == pytest.approx(0.1399039, abs=1e-7)
    gaps = [vf.free_energy_gap(gr.TorusSpec(4, 2), lam).details["gap"] for lam in (1.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))


def test_main_theorem_exact_value():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    r = vf.main_theorem_study(g, Fraction(2), 1)
    assert r.passed
    assert r.details["mu"] == Fraction(384, 15937)
    assert r.details["ratio"] == Fraction(128, 2187)


def test_fixed_size_chain():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    r = vf.fixed_size_chain_check(g, 2, lambda c: od.min_occupation(g, c) >= 1)
    assert r.passed and r.details["omega_N"] == 88
    with pytest.raises(ValueError):
        vf.fixed_size_chain_check(g, 0, lambda c: c == 0)


def test_corollary_torus():
    assert vf.corollary_torus_study(gr.TorusSpec(4, 2), 1.0, 1.0).passed


def test_bad_norm_halfspace():
    spec = cb.ReflectionGroupSpec(3, 6, 2)
    assert bin(vf.halfspace_K(spec)).count("1") == 21
    assert vf.bad_norm_halfspace_check(1.0).passed


def test_constant_fits_are_certified():
    fit = vf.prop_I_le_Phi_constant_fit(vf.default_I_le_Phi_instances(0, per_cell=5))
    assert fit.certified and fit.value >= 0
    assert vf.main_theorem_constant_fit().certified
    assert vf.corollary_torus_constant_fit().certified
    assert vf.free_energy_constant_fit([gr.TorusSpec(4, 1), gr.TorusSpec(4, 2)], (1.0, 2.0), 1.0).certified
