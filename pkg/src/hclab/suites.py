"""Named checks, constant fits and sweeps, as used by the command line and the
desk suite. Every check maps one parameter dict and a seed to a CheckReport."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import chessboard as cb
from . import entropy as en
from . import expansion as ex
from . import graphs as gr
from . import hardcore as hc
from . import order as od
from . import verify as vf
from .report import CheckReport, ConstantFit, combine, equality, inequality


class UsageError(ValueError):
    """Bad command-line parameters (exit code 2)."""


# ---------------------------------------------------------------- graph specs


def parse_graph(text: str) -> gr.BipartiteGraph:
    """``torus:L,d``, ``cycle:n``, ``hypercube:d``, ``kab:a,b``, ``gadget:m``,
    ``stretch-kab:a,b,m``, ``blowup:<spec>*m`` or ``file:path``."""
    kind, _, arg = text.partition(":")
    try:
        if kind == "blowup":
            inner, _, m = arg.rpartition("*")
            return gr.blow_up(parse_graph(inner), int(m))
        if kind == "file":
            return gr.load_graph(arg)
        nums = [int(x) for x in arg.split(",") if x]
        if kind == "torus":
            return gr.build_torus(gr.TorusSpec(*nums))
        if kind == "cycle":
            return gr.cycle(*nums)
        if kind == "hypercube":
            return gr.hypercube(*nums)
        if kind == "kab":
            return gr.complete_bipartite(*nums)
        if kind == "gadget":
            return gr.build_linear_gadget(*nums).graph
        if kind == "stretch-kab":
            a, b, m = nums
            return gr.stretch_by_gadget(gr.complete_bipartite(a, b), m)
    except (TypeError, ValueError) as e:
        raise UsageError(f"bad graph spec {text!r}: {e}") from e
    raise UsageError(f"unknown graph kind {kind!r}")


def torus_of(params: dict) -> gr.TorusSpec:
    L, d = params["torus"]
    return gr.TorusSpec(int(L), int(d))


def lam_of(params: dict):
    return hc.as_fugacity(params.get("lambda", 1))


# ---------------------------------------------------------------- random instances


def random_joint(rng: np.random.Generator, J: int, alpha: float = 0.5) -> en.FiniteDistribution:
    """Random law on {0,1}^J with Dirichlet weights."""
    outs = np.array([[(k >> j) & 1 for j in range(J)] for k in range(1 << J)], dtype=np.int64)
    return en.FiniteDistribution(outs, rng.dirichlet(np.full(1 << J, alpha)))


def random_subset_law(rng: np.random.Generator, J: int) -> tuple[list[tuple[tuple[int, ...], float]], float]:
    """Random law on subsets of range(J) and its smallest coordinate marginal."""
    while True:
        w = rng.dirichlet(np.full(1 << J, 0.7))
        law = [(tuple(j for j in range(J) if k >> j & 1), float(w[k])) for k in range(1 << J)]
        marg = [sum(p for K, p in law if j in K) for j in range(J)]
        p = min(marg)
        if p > 1e-3:
            return law, p


def random_domination_law(rng: np.random.Generator, ys: int = 3) -> en.FiniteDistribution:
    """Random law of (sigma_v, X, Y) with sigma_v <= X binary and Y in range(ys)."""
    outs = np.array([(s, x, y) for x in (0, 1) for s in range(x + 1) for y in range(ys)], dtype=np.int64)
    return en.FiniteDistribution(outs, rng.dirichlet(np.full(len(outs), 0.6)))


# ---------------------------------------------------------------- checks


@dataclass
class CheckDef:
    id: str
    statement: str
    fn: Callable[[dict, int], CheckReport]
    defaults: dict = field(default_factory=dict)
    stochastic: bool = False


CHECKS: dict[str, CheckDef] = {}


def _check(id: str, statement: str, stochastic: bool = False, **defaults):
    def deco(fn):
        CHECKS[id] = CheckDef(id, statement, fn, defaults, stochastic)
        return fn

    return deco


@_check("z-oracles", "Z(K_2) = 1 + 2 lam; Z(C_4, 1) = 7; Z(C_6, 1) = 18; transfer matrix = enumeration on small tori")
def _z_oracles(p, seed):
    parts = []
    for lam in (Fraction(1, 2), Fraction(1), Fraction(2)):
        z = hc.partition_bruteforce(gr.complete_bipartite(1, 1), lam).exact
        parts.append(equality(f"K2[{lam}]", z, 1 + 2 * lam, 0))
    parts.append(equality("C4", hc.partition_bruteforce(gr.cycle(4), 1).exact, Fraction(7), 0))
    parts.append(equality("C6", hc.partition_bruteforce(gr.cycle(6), 1).exact, Fraction(18), 0))
    for L in range(2, 7):
        for d in (1, 2, 3):
            if L ** (d - 1) > 6 or L**d > 40:
                continue
            spec = gr.TorusSpec(L, d)
            g = gr.build_torus(spec)
            for lam in (0.5, 1.0, 2.0):
                a = hc.partition_transfer_torus(spec, lam).log_z
                b = hc.partition_bruteforce(g, lam).log_z
                # relative 1e-10 on Z is an absolute 1e-10 on log Z
                parts.append(equality(f"transfer[{L},{d},{lam}]", a, b, 1e-10))
    return combine("z-oracles", parts)


@_check("trivial-bound", "Z >= (1+lam)^(|V|/2)", graph="torus:4,2", **{"lambda": 1})
def _trivial(p, seed):
    return hc.trivial_lower_bound_check(parse_graph(p["graph"]), lam_of(p))


@_check("variational", "I(nu) = log Z - KL(nu || mu) on random laws nu", True, graph="torus:4,2", trials=20, **{"lambda": 1})
def _variational(p, seed):
    g = parse_graph(p["graph"])
    rng = np.random.default_rng(seed)
    configs = hc.enumerate_configs(g)
    parts = []
    for _ in range(int(p["trials"])):
        k = int(rng.integers(1, len(configs) + 1))
        parts.append(en.variational_identity_check(g, float(lam_of(p)), vf.random_distribution(configs, rng, k)))
    return combine("variational", parts)


@_check("i-zeta", "log zeta(E) = I(sigma | E) for Gibbs sigma and random events E", True, graph="torus:4,2", trials=20, **{"lambda": 1})
def _i_zeta(p, seed):
    g = parse_graph(p["graph"])
    rng = np.random.default_rng(seed)
    configs = hc.enumerate_configs(g)
    parts = []
    for _ in range(int(p["trials"])):
        keep = rng.random(len(configs)) < rng.uniform(0.05, 0.95)
        keep[rng.integers(len(configs))] = True
        chosen = set(configs[keep].tolist())
        ev = lambda c, s=chosen: np.isin(c, np.fromiter(s, dtype=np.uint64))  # noqa: E731
        parts.append(en.I_zeta_identity_check(g, float(lam_of(p)), ev))
    return combine("i-zeta", parts)


@_check("shearer", "S(X) <= (1/p) E S(X_K) for random K independent of X", True, trials=100)
def _shearer(p, seed):
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(int(p["trials"])):
        J = int(rng.integers(1, 4))
        joint = random_joint(rng, J)
        law, pm = random_subset_law(rng, J)
        parts.append(en.shearer_check(joint, law, pm))
    return combine("shearer", parts)


@_check("submodularity", "S(X_{K1 & K2}) + S(X_{K1 | K2}) <= S(X_K1) + S(X_K2)", True, trials=100)
def _submod(p, seed):
    rng = np.random.default_rng(seed)
    return combine(
        "submodularity",
        [en.entropy_submodularity_check(random_joint(rng, int(rng.integers(1, 4)))) for _ in range(int(p["trials"]))],
    )


@_check("binary-entropy-bound", "S(x) <= x log(e/x) on [0, 1]")
def _bin_ent(p, seed):
    return en.binary_entropy_bound_check()


@_check("i-le-logplam", "I(sigma_v | X, Y) <= log(1+lam) E X when sigma_v <= X", True, trials=100, **{"lambda": 1})
def _i_le(p, seed):
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(int(p["trials"])):
        lam = float(lam_of(p)) if "lambda" in p else float(rng.uniform(0.1, 5))
        parts.append(en.prop_I_le_logplam_check(random_domination_law(rng), lam, 0, 1, 2))
    return combine("i-le-logplam", parts)


@_check("m-le-phi", "M <= (delta / 2h) Phi |V| on every configuration", graph="torus:4,2")
def _m_le_phi(p, seed):
    g = parse_graph(p["graph"])
    configs = hc.enumerate_configs(g)
    h = p.get("h")
    h = ex.cheeger_exact(g).value if h is None else Fraction(h)
    return combine(
        "m-le-phi", [od.check_M_le_Phi(g, configs, h), od.check_M_le_Phi_internals(g, configs)], h=h
    )


@_check("m-le-phi-glauber", "M <= (delta / 2h) Phi |V| on heat-bath samples", True, torus=(4, 3), samples=100_000, h="1/4", **{"lambda": 1})
def _m_le_phi_mc(p, seed):
    g = gr.build_torus(torus_of(p))
    chains = 1000
    per = max(1, int(p["samples"]) // chains)
    snaps = hc.glauber_batch(g, float(lam_of(p)), chains, 200 + 20 * per, seed, record_every=20)[-chains * per :]
    return od.check_M_le_Phi(g, snaps, Fraction(p["h"]))


@_check("phi-formula", "edge form of Phi equals the odd-vertex min form, exactly", graph="torus:4,2")
def _phi_formula(p, seed):
    g = parse_graph(p["graph"])
    r = od.roughness_arrays(g, hc.enumerate_configs(g))
    # dis/|E| == 2 min_sum/(|V| delta), cross-multiplied
    bad = int((r.disagreements * g.n * g.degree != 2 * r.min_sum * g.num_edges).sum())
    rep = inequality("phi-formula", bad, 0, 0, configs=len(r.disagreements))
    if p.get("single_odd") is None:
        return rep
    # one occupied odd vertex: compare with the expected roughness
    v = g.odd[0]
    val = od.roughness(g, 1 << v)
    return combine("phi-formula", [rep, equality("single-odd", val, Fraction(p["single_odd"]), 0, witness=v)], single_odd=val)


@_check("cheeger", "Cheeger constant by exhaustion (or slice transfer on tori)", graph="torus:4,2")
def _cheeger(p, seed):
    g = parse_graph(p["graph"])
    res = ex.cheeger_exact(g)
    return inequality("cheeger", Fraction(0), res.value, 0, value=res.value, witness_set=res.witness, method=res.method)


@_check("local-expansion", "torus certificate C_LE = 12, M_LE = 6 L^d / d verified on its orbit", torus=(4, 2), mode="exact")
def _local_exp(p, seed):
    spec = torus_of(p)
    cert = ex.torus_local_expansion_certificate(spec)
    return ex.verify_local_expansion(gr.build_torus(spec), cert, mode=p["mode"], seed=seed)


@_check("green-positivity", "g_{u,w} <= sqrt((g_{u,u}-1)(g_{w,w}-1)) for the walk Green function, exact", True, trials=20, half=8, M0=8)
def _green(p, seed):
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(int(p["trials"])):
        half = int(rng.integers(2, int(p["half"]) + 1))
        deg = int(rng.integers(2, half + 1))
        g = gr.random_regular_bipartite(half, deg, rng)
        M0 = int(rng.integers(1, int(p["M0"]) + 1))
        parts.append(ex.check_green_positivity(ex.green_table(g, M0, exact=True), g))
    return combine("green-positivity", parts)


@_check("path-vert", "walk-visit bound via exact avoidance counting", graph="hypercube:3", M0=2, C0=1)
def _path_vert(p, seed):
    return ex.path_vert_check(parse_graph(p["graph"]), int(p["M0"]), Fraction(p["C0"]))


@_check("dominating", "torus dominating set with |D| < 2 L^d / d and a tree with |V(T)| <= 3|D|")
def _dominating(p, seed):
    parts = []
    grid = [(L, d) for L in range(2, 7) for d in (1, 2, 3) if L**d <= 216] + [(2, d) for d in range(4, 8)]
    for L, d in grid:
        spec = gr.TorusSpec(L, d)
        g = gr.build_torus(spec)
        D = gr.dominating_set_torus(spec)
        parts.append(inequality(f"dominates[{L},{d}]", 0 if gr.is_dominating(g, D) else 1, 0, 0))
        parts.append(inequality(f"size[{L},{d}]", Fraction(len(D)), Fraction(2 * spec.n, d), 0))
        if len(D) * d == 2 * spec.n:
            parts[-1].passed = False
        T = gr.dominating_tree(g, D)
        parts.append(inequality(f"tree[{L},{d}]", len(T.vertices), 3 * len(D), 0))
    return combine("dominating", parts)


@_check("detailed-balance", "mu(s) P(s,t) = mu(t) P(t,s) for the heat-bath chain, exact", graph="cycle:4", **{"lambda": 1})
def _db(p, seed):
    return hc.detailed_balance_check(parse_graph(p["graph"]), lam_of(p))


@_check("glauber-marginals", "heat-bath occupation frequencies within 3 standard errors", True, graph="cycle:4", steps=1_000_000, **{"lambda": 1})
def _gm(p, seed):
    return hc.glauber_marginals_check(parse_graph(p["graph"]), float(lam_of(p)), int(p["steps"]), seed)


@_check("chessboard-estimate", "zeta(prod tau f_tau) <= prod ||f_tau||", True, ell=1, L=4, d=1, trials=20, **{"lambda": 1})
def _cb_est(p, seed):
    spec = cb.ReflectionGroupSpec(int(p["ell"]), int(p["L"]), int(p["d"]))
    rng = np.random.default_rng(seed)
    parts = []
    for _ in range(int(p["trials"])):
        fs = [cb.random_observable(spec, rng) for _ in range(spec.order)]
        parts.append(cb.check_chessboard_estimate(fs, lam_of(p)))
    return combine("chessboard-estimate", parts)


@_check("seminorm", "reflection positivity, seminorm homogeneity, triangle inequality and monotonicity", True, ell=1, L=4, d=1, trials=20, **{"lambda": 1})
def _semi(p, seed):
    spec = cb.ReflectionGroupSpec(int(p["ell"]), int(p["L"]), int(p["d"]))
    return cb.check_seminorm_properties(spec, lam_of(p), np.random.default_rng(seed), int(p["trials"]))


@_check("torus-comparison", "||f|| on a larger torus <= ||f|| on the smaller one", True, ell=1, L=4, d=1, trials=10, **{"lambda": 1})
def _tcomp(p, seed):
    spec = cb.ReflectionGroupSpec(int(p["ell"]), int(p["L"]), int(p["d"]))
    rng = np.random.default_rng(seed)
    parts = [cb.seminorm_torus_comparison(cb.constant_observable(spec), lam_of(p))]
    for _ in range(int(p["trials"])):
        parts.append(cb.seminorm_torus_comparison(cb.random_observable(spec, rng), lam_of(p)))
    return combine("torus-comparison", parts)


@_check("sums-identity", "sum over reflections of weighted |sigma tau|_A equals |sigma_A|", True, ell=3, L=6, d=2, trials=20)
def _sums(p, seed):
    spec = cb.ReflectionGroupSpec(int(p["ell"]), int(p["L"]), int(p["d"]))
    rng = np.random.default_rng(seed)
    n = spec.torus.n
    parts = []
    for _ in range(int(p["trials"])):
        sigma = int(rng.integers(0, 1 << n, dtype=np.uint64)) if n < 64 else 0
        parts.append(cb.check_sums_identity(sigma, range(n), spec))
    for x in cb.block_sites(spec):
        parts.append(equality(f"stabilizer{x}", 1 / cb.weight(x, spec.ell), Fraction(cb.stabilizer_size(spec, x)), 0))
    return combine("sums-identity", parts)


def _phase(p):
    spec = cb.ReflectionGroupSpec(int(p["ell"]), int(p["L"]), int(p["d"]))
    return cb.phase_observable(spec, lam_of(p), Fraction(p.get("c_alpha", "1/100")))


@_check("separator", "tau_s f * tau_t f >= 0 for adjacent blocks, exhaustive", ell=3, L=6, d=1, **{"lambda": 1})
def _sep(p, seed):
    return cb.check_separator(_phase(p))


@_check("f-mean-zero", "E f = 0 for the phase observable (odd ell)", ell=3, L=6, d=1, **{"lambda": 1})
def _fmean(p, seed):
    return cb.check_f_expectation_zero(_phase(p))


@_check("contour-chain", "P(f = 0 on A) bounded through the chessboard estimate", ell=3, L=6, d=2, blocks=1, **{"lambda": 1})
def _contour(p, seed):
    ph = _phase(p)
    A = [(0,) * ph.spec.d, (1,) + (0,) * (ph.spec.d - 1)][: int(p["blocks"])]
    return cb.contour_probability_chain(ph, A)


@_check("three-term", "I(sigma) <= I(sigma_E|sigma_O) + (1/s)[I(sigma_B|B,A,phi_A) + S(phi_A|A)]", True, graph="cycle:4", trials=10, scheme="default", **{"lambda": 1})
def _three(p, seed):
    g = parse_graph(p["graph"])
    sch = vf.default_scheme(g) if p["scheme"] == "default" else vf.full_odd_scheme(g)
    rng = np.random.default_rng(seed)
    configs = hc.enumerate_configs(g)
    dists = [hc.exact_distribution(g, lam_of(p))]
    dists += [vf.random_distribution(configs, rng, int(rng.integers(1, len(configs) + 1))) for _ in range(int(p["trials"]))]
    return combine("three-term", [vf.three_term_check(g, d, float(lam_of(p)), sch) for d in dists])


@_check("gain-terms", "the three local gain bounds, with the two-neighbour coupling built exactly", True, graph="torus:4,2", trials=5, **{"lambda": 1})
def _gain(p, seed):
    g = parse_graph(p["graph"])
    sch = vf.default_scheme(g)
    rng = np.random.default_rng(seed)
    configs = hc.enumerate_configs(g)
    dists = [hc.exact_distribution(g, lam_of(p))]
    dists += [vf.random_distribution(configs, rng, int(rng.integers(1, len(configs) + 1))) for _ in range(int(p["trials"]))]
    return combine("gain-terms", [vf.gain_terms_check(g, d, float(lam_of(p)), sch) for d in dists])


@_check("loss-term", "S(phi_A|A) <= C_LE |V| (2(p + 1/delta) S(E Phi) + log 2/(delta M_LE))", torus=(4, 2), **{"lambda": 1})
def _loss(p, seed):
    spec = torus_of(p)
    g = gr.build_torus(spec)
    cert = ex.torus_local_expansion_certificate(spec)
    items = vf.exposure_items(vf.default_scheme(g))
    mu = hc.exact_distribution(g, lam_of(p))
    parts = [
        vf.loss_term_check(g, vf.phi_distribution(g, mu), items, cert),
        vf.loss_term_check(g, vf.point_mass(0), items, cert),
    ]
    if g.n <= 16:
        parts.append(vf.loss_term_check(g, vf.iid_phi_distribution(g), items, cert))
    return combine("loss-term", parts)


@_check("simplified-route", "S(phi_{V(T)}|T) <= q|E| S(E Phi) + log 2 and the derived certificate", torus=(4, 2), **{"lambda": 1})
def _simpl(p, seed):
    spec = torus_of(p)
    g = gr.build_torus(spec)
    src = ex.torus_local_expansion_certificate(spec).source
    mu = hc.exact_distribution(g, lam_of(p))
    return combine(
        "simplified-route",
        [vf.simplified_route_check(g, vf.phi_distribution(g, mu), src), vf.simplified_route_check(g, vf.point_mass(0), src)],
    )


@_check("main-theorem", "mu(M > r) <= zeta(M > r) / (1+lam)^(|V|/2)", graph="torus:4,2", r=1, **{"lambda": 2})
def _main(p, seed):
    return vf.main_theorem_study(parse_graph(p["graph"]), lam_of(p), int(p["r"]))


@_check("free-energy-gap", "0 <= (1/L^d) log Z - (1/2) log(1+lam)", torus=(4, 1), **{"lambda": 1})
def _fe(p, seed):
    return vf.free_energy_gap(torus_of(p), float(lam_of(p)))


@_check("hoeffding", "P(|Bin(n,p) - np| >= m) <= 2 (p(1-p))^(m^2/n), exact", n_max=60)
def _hoeff(p, seed):
    return combine("hoeffding", [vf.hoeffding_point(10, Fraction(1, 2), 5), vf.hoeffding_check(int(p["n_max"]))])


@_check("fixed-size", "fixed-size bad-event chain with lam = p/(1-p), p = 2N/|V|", graph="torus:4,2", N=2, event="M>=1")
def _fixed(p, seed):
    g = parse_graph(p["graph"])
    ev = {
        "M>=1": lambda c: od.min_occupation(g, c) >= 1,
        "site0": lambda c: (c & np.uint64(1)) == 1,
        "all": lambda c: np.ones(len(c), dtype=bool),
    }
    if p["event"] not in ev:
        raise UsageError(f"event must be one of {sorted(ev)}")
    return vf.fixed_size_chain_check(g, int(p["N"]), ev[p["event"]])


@_check("corollary-torus", "mu(B) <= zeta(B)/(1+lam)^(L^d/2) and the phi sandwich", torus=(4, 2), C0=1, **{"lambda": 2})
def _cor(p, seed):
    return vf.corollary_torus_study(torus_of(p), lam_of(p), float(p["C0"]))


@_check("bad-norm", "log zeta(tilde B) <= |K|(S(p_K) + p_K log lam) + |K^c| log(1+lam)", ell=3, d=2, **{"lambda": 1})
def _badnorm(p, seed):
    return vf.bad_norm_halfspace_check(lam_of(p), int(p["ell"]), int(p["d"]))


@_check("exposure-density", "closed form of P(u in B) equals enumeration, Monte Carlo within 3 sigma", True, samples=200_000)
def _expo(p, seed):
    rng = np.random.default_rng(seed)
    parts = []
    for delta in range(2, 9):
        s = vf.exposure_density(delta)
        parts.append(equality(f"enumerated[{delta}]", s, vf.exposure_density_enumerated(delta), 0))
        m, se = vf.exposure_density_montecarlo(delta, int(p["samples"]), rng)
        parts.append(inequality(f"montecarlo[{delta}]", abs(m - float(s)), 3 * se, 0))
    for spec in (gr.TorusSpec(4, 1), gr.TorusSpec(4, 2), gr.TorusSpec(2, 3)):
        g = gr.build_torus(spec)
        parts.append(equality(f"scheme[{spec.L},{spec.d}]", vf.default_scheme(g).s, vf.exposure_density(spec.degree), 0))
    return combine("exposure-density", parts)


@_check("weitz", "lam_Delta = (Delta-1)^(Delta-1)/(Delta-2)^Delta and lam_Delta Delta/e -> 1")
def _weitz(p, seed):
    return combine(
        "weitz",
        [
            equality("Delta=3", vf.weitz_threshold(3), Fraction(4), 0),
            equality("Delta=4", vf.weitz_threshold(4), Fraction(27, 16), 0),
            inequality("asymptote", abs(vf.weitz_asymptote(1000) - 1), 0.01, 0),
        ],
    )


@_check("blowup-equivalence", "Z of the m-blow-up at lam = Z at (1+lam)^m - 1", **{"lambda": "1/2"})
def _blow(p, seed):
    return combine(
        "blowup-equivalence",
        [vf.blowup_equivalence_check(F, m, lam_of(p)) for F in (gr.complete_bipartite(1, 1), gr.cycle(4)) for m in (2, 3)],
    )


@_check("gadget-reduction", "reduced-model balance probability equals direct enumeration on a blow-up")
def _gadget(p, seed):
    return vf.gadget_reduction_check()


# ---------------------------------------------------------------- fits


def _fit_prop(grid: dict) -> ConstantFit:
    return vf.prop_I_le_Phi_constant_fit(
        vf.default_I_le_Phi_instances(int(grid.get("seed", 0)), int(grid.get("per_cell", 50)), tuple(grid.get("lambdas", (0.5, 1.0, 2.0))))
    )


def _fit_main(grid: dict) -> ConstantFit:
    rows = grid.get("instances")
    if rows is None:
        return vf.main_theorem_constant_fit()
    return vf.main_theorem_constant_fit(
        [(r["graph"], parse_graph(r["graph"]), hc.as_fugacity(r["lambda"]), int(r["r"])) for r in rows]
    )


def _fit_torus(grid: dict) -> ConstantFit:
    rows = grid.get("instances")
    if rows is None:
        return vf.corollary_torus_constant_fit()
    return vf.corollary_torus_constant_fit(
        [(gr.TorusSpec(*r["torus"]), hc.as_fugacity(r["lambda"]), float(r["C0"])) for r in rows]
    )


def _fit_free(grid: dict) -> ConstantFit:
    specs = [gr.TorusSpec(*t) for t in grid.get("tori", [(4, 1), (6, 1), (4, 2), (2, 3), (2, 4)])]
    return vf.free_energy_constant_fit(specs, tuple(grid.get("lambdas", (0.5, 1.0, 2.0, 4.0))), float(grid.get("c", 1.0)))


FITS: dict[str, tuple[str, Callable[[dict], ConstantFit]]] = {
    "prop-i-le-phi": ("free energy versus roughness: smallest C", _fit_prop),
    "main-theorem-tail": ("tail of M: largest c", _fit_main),
    "torus-bad-event-tail": ("torus bad event: smallest C_2", _fit_torus),
    "free-energy-per-site": ("free-energy gap: smallest C at fixed c", _fit_free),
}


@_check("constant-fit", "fitted constant certified on its grid, twice from scratch with identical value", fit="prop-i-le-phi")
def _cfit(p, seed):
    if p["fit"] not in FITS:
        raise UsageError(f"fit must be one of {sorted(FITS)}")
    run = FITS[p["fit"]][1]
    grid = dict(p.get("grid") or {})
    first, second = run(grid), run(grid)
    parts = [
        inequality("certified", 0 if first.certified else 1, 0, 0),
        inequality("recertified", 0 if second.certified else 1, 0, 0),
        equality("same-value", first.value, second.value, 0),
    ]
    return combine("constant-fit", parts, fit=first.to_dict())


# ---------------------------------------------------------------- sweeps


SWEEP_COLUMNS = {
    "free-energy-gap": ["L", "d", "lambda", "log_z", "gap"],
    "balance-gadget": ["delta", "m", "lambda", "lambda_reduced", "vertices", "mu_balanced"],
    "main-theorem": ["graph", "r", "lambda", "mu", "ratio"],
    "magnetization": ["graph", "lambda", "mean_size", "mean_M", "mu_balanced"],
}


def run_sweep(kind: str, params: dict, lams: list) -> list[list]:
    rows: list[list] = []
    if kind == "free-energy-gap":
        spec = torus_of(params)
        for lam in lams:
            rep = vf.free_energy_gap(spec, float(lam))
            rows.append([spec.L, spec.d, float(lam), rep.details["log_z"], rep.details["gap"]])
    elif kind == "balance-gadget":
        delta, m = int(params.get("delta", 3)), int(params.get("m", 1))
        for row in vf.gadget_threshold_scan(delta, [float(x) for x in lams], m):
            rows.append([row["delta"], row["m"], row["lam"], row["lam_reduced"], row["vertices"], row["mu_balanced"]])
    elif kind == "main-theorem":
        g = parse_graph(params["graph"])
        r = int(params.get("r", 1))
        for row in vf.main_theorem_sweep(g, [hc.as_fugacity(x) for x in lams], r):
            rows.append([params["graph"], r, row["lam"], row["mu"], row["ratio"]])
    elif kind == "magnetization":
        g = parse_graph(params["graph"])
        configs = hc.enumerate_configs(g)
        for lam in lams:
            mu = hc.exact_distribution(g, float(lam))
            rows.append(
                [
                    params["graph"],
                    float(lam),
                    mu.expect(hc.popcount),
                    mu.expect(lambda c: od.min_occupation(g, c)),
                    mu.prob(lambda c, lam=float(lam): od.balanced_event(c, g, lam)),
                ]
            )
        del configs
    else:
        raise UsageError(f"unknown sweep {kind!r}; choose from {sorted(SWEEP_COLUMNS)}")
    return rows


# ---------------------------------------------------------------- desk suite


@dataclass
class Job:
    check: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    label: str = ""
    criterion: int = 0


def acceptance_jobs(seed: int = 0) -> list[Job]:
    """The full acceptance grid; every job carries its criterion number."""
    J = []

    def add(n, c, label="", **p):
        J.append(Job(c, {**CHECKS[c].defaults, **p}, seed, label or c, n))

    add(1, "z-oracles")
    for g in ("torus:4,2", "cycle:4", "cycle:6", "hypercube:3", "torus:2,4", "torus:6,2"):
        for lam in ("1/2", 1, 2):
            add(2, "trivial-bound", f"trivial-bound[{g},{lam}]", graph=g, **{"lambda": lam})
    for g in ("cycle:4", "torus:4,2"):
        add(3, "variational", f"variational[{g}]", graph=g, trials=200)
        add(3, "i-zeta", f"i-zeta[{g}]", graph=g, trials=50)
    add(4, "shearer", trials=1000)
    add(4, "submodularity", trials=500)
    add(5, "m-le-phi")
    add(5, "m-le-phi-glauber")
    add(6, "phi-formula", "phi-formula[cycle:6]", graph="cycle:6")
    add(6, "phi-formula", "phi-formula[torus:4,2]", graph="torus:4,2", single_odd="3/8")
    for g in ("cycle:4", "kab:2,2"):
        add(7, "three-term", f"three-term[{g}]", graph=g, trials=100)
        add(7, "three-term", f"three-term-equality[{g}]", graph=g, trials=100, scheme="full")
    for t in ((4, 2), (2, 3)):
        g = f"torus:{t[0]},{t[1]}"
        add(8, "local-expansion", f"local-expansion[{g}]", torus=t)
        add(8, "gain-terms", f"gain-terms[{g}]", graph=g)
        add(8, "loss-term", f"loss-term[{g}]", torus=t)
    add(9, "hoeffding", n_max=60)
    for L, d, n_est, n_semi in ((4, 1, 20, 35), (6, 1, 15, 35), (4, 2, 4, 30)):
        add(10, "chessboard-estimate", f"chessboard-estimate[{L},{d}]", ell=1, L=L, d=d, trials=n_est)
        add(10, "seminorm", f"seminorm[{L},{d}]", ell=1, L=L, d=d, trials=n_semi)
    add(10, "torus-comparison", "torus-comparison[4,1]", ell=1, L=4, d=1, trials=20)
    add(10, "torus-comparison", "torus-comparison[6,1]", ell=3, L=6, d=1, trials=5)
    add(10, "torus-comparison", "torus-comparison[2,2]", ell=1, L=2, d=2, trials=3)
    add(10, "torus-comparison", "torus-comparison[4,2]", ell=1, L=4, d=2, trials=1)
    for ell, L in ((1, 4), (3, 6)):
        for d in (1, 2):
            add(11, "sums-identity", f"sums-identity[ell={ell},d={d}]", ell=ell, L=L, d=d, trials=100)
    for d in (1, 2):
        for lam in ("1/2", 1, 2):
            add(12, "separator", f"separator[6,{d},{lam}]", d=d, **{"lambda": lam})
            add(12, "f-mean-zero", f"f-mean-zero[6,{d},{lam}]", d=d, **{"lambda": lam})
    for b in (1, 2):
        add(13, "contour-chain", f"contour-chain[|A|={b}]", blocks=b)
    add(14, "green-positivity", trials=200)
    for g in ("cycle:4", "hypercube:3", "torus:4,2"):
        add(14, "path-vert", f"path-vert[{g}]", graph=g)
    add(15, "dominating")
    add(16, "detailed-balance")
    for g in ("kab:1,1", "cycle:4"):
        add(16, "glauber-marginals", f"glauber-marginals[{g}]", graph=g)
    for f in ("prop-i-le-phi", "main-theorem-tail", "torus-bad-event-tail", "free-energy-per-site"):
        add(17, "constant-fit", f"constant-fit[{f}]", fit=f)
    return J


def quick_jobs(seed: int = 0) -> list[Job]:
    """A fast pass over every check at desk scale."""
    J = []
    add = lambda c, label="", **p: J.append(Job(c, {**CHECKS[c].defaults, **p}, seed, label or c))  # noqa: E731
    add("z-oracles")
    for g in ("torus:4,2", "cycle:6", "hypercube:3"):
        add("trivial-bound", f"trivial-bound[{g}]", graph=g)
    add("variational", graph="cycle:4")
    add("variational", "variational[Z_4^2]", graph="torus:4,2")
    add("i-zeta")
    add("shearer")
    add("submodularity")
    add("binary-entropy-bound")
    add("i-le-logplam")
    add("m-le-phi")
    add("phi-formula", graph="cycle:6")
    add("phi-formula", "phi-formula[Z_4^2]")
    add("local-expansion")
    add("local-expansion", "local-expansion[Z_2^3]", torus=(2, 3))
    add("green-positivity")
    for g in ("cycle:4", "hypercube:3", "torus:4,2"):
        add("path-vert", f"path-vert[{g}]", graph=g)
    add("dominating")
    add("detailed-balance")
    add("glauber-marginals", steps=200_000)
    add("chessboard-estimate")
    add("seminorm")
    add("torus-comparison")
    add("sums-identity")
    add("separator")
    add("f-mean-zero")
    add("three-term")
    add("three-term", "three-term[equality]", scheme="full")
    add("gain-terms")
    add("loss-term")
    add("simplified-route")
    add("main-theorem")
    add("free-energy-gap")
    add("hoeffding", n_max=30)
    add("fixed-size")
    add("corollary-torus")
    add("exposure-density")
    add("weitz")
    add("blowup-equivalence")
    add("gadget-reduction")
    return J


def threads_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get("HCLAB_THREADS", default)))
    except ValueError:
        return default


def run_job(job: Job) -> CheckReport:
    rep = CHECKS[job.check].fn(job.params, job.seed)
    rep.details.setdefault("label", job.label)
    return rep


def run_jobs(jobs: list[Job], threads: int | None = None) -> list[CheckReport]:
    """Run independent jobs, possibly concurrently; results keep job order."""
    threads = threads_from_env() if threads is None else threads
    if threads <= 1:
        return [run_job(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_job, jobs))


SUITES = {"desk": acceptance_jobs, "quick": quick_jobs}
