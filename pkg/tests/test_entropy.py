import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hclab import entropy as en
from hclab import graphs as gr
from hclab import hardcore as hc
from hclab.suites import random_joint, random_subset_law


def test_entropy_of_uniform():
    d = en.FiniteDistribution(np.arange(8), np.full(8, 1 / 8))
    assert math.isclose(en.shannon_entropy(d), math.log(8))
    assert math.isclose(en.entropy(d), math.log(8))


def test_zero_probabilities_ignored():
    assert en.shannon_entropy([0.5, 0.5, 0.0]) == pytest.approx(math.log(2))


def test_distribution_validation():
    with pytest.raises(ValueError):
        en.FiniteDistribution(np.arange(2), [0.7, 0.7])
    with pytest.raises(ValueError):
        en.FiniteDistribution(np.arange(2), [1.5, -0.5])


def test_conditional_entropy_chain_rule():
    rng = np.random.default_rng(1)
    d = random_joint(rng, 3)
    joint = en.entropy(d, [0, 1, 2])
    assert math.isclose(joint, en.entropy(d, [0]) + en.conditional_entropy(d, [1, 2], [0]), abs_tol=1e-12)


def test_kl_properties():
    mu = hc.exact_distribution(gr.cycle(4), 1.0)
    assert en.kl_divergence(mu, mu) == pytest.approx(0, abs=1e-15)
    point = en.FiniteDistribution(np.array([0], dtype=np.uint64), [1.0])
    assert en.kl_divergence(point, mu) == pytest.approx(math.log(7))
    with pytest.raises(ValueError):
        en.kl_divergence(mu, point)


def test_free_energy_of_gibbs_is_logZ():
    g = gr.build_torus(gr.TorusSpec(4, 2))
    for lam in (0.5, 1.0, 3.0):
        mu = hc.exact_distribution(g, lam)
        assert en.free_energy_I(mu, lam) == pytest.approx(hc.partition_bruteforce(g, lam).log_z, abs=1e-10)


def test_variational_and_i_zeta_on_C4():
    g = gr.cycle(4)
    mu = hc.exact_distribution(g, 1.0)
    assert en.variational_identity_check(g, 1.0, mu).passed
    r = en.I_zeta_identity_check(g, 1.0, lambda c: hc.popcount(c) >= 1)
    assert r.passed and math.isclose(r.details["zeta"], 6)


def test_free_energy_input_rejects_non_independent():
    with pytest.raises(ValueError):
        en.FreeEnergyInput(en.FiniteDistribution(np.array([3], dtype=np.uint64), [1.0]), 1.0, gr.cycle(4))


def test_binary_entropy_bound():
    assert en.binary_entropy_bound_check().passed
    assert en.binary_entropy(0.5) == pytest.approx(math.log(2))


def test_shearer_with_uniform_pairs():
    # K a uniform pair of {0,1,2}: p = 2/3, the classical case
    rng = np.random.default_rng(4)
    d = random_joint(rng, 3)
    law = [((0, 1), 1 / 3), ((0, 2), 1 / 3), ((1, 2), 1 / 3)]
    assert en.shearer_check(d, law, 2 / 3).passed


def test_shearer_rejects_small_marginal():
    d = random_joint(np.random.default_rng(0), 2)
    with pytest.raises(ValueError):
        en.shearer_check(d, [((0,), 1.0)], 0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3))
def test_shearer_three_routes(seed, J):
    rng = np.random.default_rng(seed)
    d = random_joint(rng, J)
    law, p = random_subset_law(rng, J)
    assert en.shearer_check(d, law, p).passed
    assert en.shearer_chain_rule_route(d, law, p).passed
    assert en.shearer_choquet_route(d, law, p).passed


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3))
def test_submodularity(seed, J):
    assert en.entropy_submodularity_check(random_joint(np.random.default_rng(seed), J)).passed


def test_lovasz_extension_at_indicator():
    F = lambda S: float(len(S) ** 2)  # noqa: E731
    assert en.lovasz_extension(F, [1, 0, 1]) == pytest.approx(4.0)
    assert en.lovasz_extension(F, [0, 0, 0]) == pytest.approx(0.0)


def test_I_le_logplam_equality_case():
    # sigma_v = X, no Y: I = log(1+lam) P(X=1) exactly when sigma_v is Bernoulli(lam/(1+lam)) given X=1
    lam = 2.0
    outs = np.array([(0, 0), (0, 1), (1, 1)])
    px1 = 0.4
    d = en.FiniteDistribution(outs, [1 - px1, px1 / (1 + lam), px1 * lam / (1 + lam)])
    r = en.prop_I_le_logplam_check(d, lam, 0, 1)
    assert r.passed and abs(float(r.margin)) < 1e-12
