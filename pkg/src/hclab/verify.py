"""Exact checks of the constant-free inequalities behind long-range order and
constant-fit studies of the constant-bearing ones, on enumerable instances.

Distributions over configurations are ``FiniteDistribution`` objects whose
outcomes are bitmasks. Entropies are in nats and evaluated in floating point
from exact tables; probabilities that are rational are kept as ``Fraction``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Callable, Iterable, Sequence

import numpy as np

from .chessboard import (
    ReflectionGroupSpec,
    block_sites,
    group_elements,
    patterns,
    phase_observable,
    torus_configs,
    weight,
)
from .entropy import FiniteDistribution, _entropy_of_labels, binary_entropy, labels
from .expansion import (
    LocalExpansionCertificate,
    OrbitSource,
    cheeger_exact,
    torus_local_expansion_certificate,
    verify_local_expansion,
)
from .graphs import (
    BipartiteGraph,
    TorusSpec,
    blow_up,
    build_linear_gadget,
    build_torus,
    complete_bipartite,
    stretch_by_gadget,
    torus_coords,
    torus_index,
)
from .hardcore import (
    as_fugacity,
    enumerate_configs,
    exact_distribution,
    partition_bruteforce,
    partition_transfer_torus,
    popcount,
    zeta,
)
from .order import (
    balanced_event,
    bad_event_torus,
    edge_disagreements,
    min_occupation,
    phi_even_masks,
    roughness_arrays,
)
from .report import CheckReport, ConstantFit, combine, equality, inequality

TOL = 1e-10
SCHEME_CAP = 12  # |V_E| for enumerating the exposed set
_U0 = np.uint64(0)


def _H(keys: np.ndarray, p: np.ndarray) -> float:
    return _entropy_of_labels(labels(keys), p)


def _log(lam) -> float:
    return math.log(float(lam))


def _logp(lam) -> float:
    return math.log1p(float(lam))


# ---------------------------------------------------------------- exposure schemes


@dataclass
class ExposureScheme:
    """A random pair (A, B) with A in V_E and B in V_O, independent of sigma.

    ``items`` lists (probability, A mask, B mask). ``s`` is P(u in B), which
    must be the same for every odd u.
    """

    graph: BipartiteGraph
    items: list[tuple[Fraction, int, int]]
    name: str = "scheme"
    s: Fraction = field(init=False)

    def __post_init__(self) -> None:
        tot = sum(w for w, _, _ in self.items)
        if tot != 1:
            raise ValueError(f"scheme probabilities sum to {tot}")
        self.s = scheme_density(self)

    def inclusion(self, u: int) -> Fraction:
        return sum((w for w, _, B in self.items if B >> u & 1), Fraction(0))

    @property
    def max_marginal(self) -> Fraction:
        """max over even v of P(v in A)."""
        return max(sum((w for w, A, _ in self.items if A >> v & 1), Fraction(0)) for v in self.graph.even)


def scheme_density(scheme: ExposureScheme) -> Fraction:
    vals = {u: scheme.inclusion(u) for u in scheme.graph.odd}
    if len(set(vals.values())) != 1:
        raise ValueError(f"P(u in B) is not constant over odd vertices: {vals}")
    s = next(iter(vals.values()))
    if s == 0:
        raise ValueError("B is empty almost surely")
    return s


def _iid_subsets(g: BipartiteGraph, p: Fraction):
    ev = g.even
    if len(ev) > SCHEME_CAP:
        raise ValueError(f"|V_E| = {len(ev)} exceeds the enumeration cap {SCHEME_CAP}")
    for bits in range(1 << len(ev)):
        A = 0
        k = 0
        for i, v in enumerate(ev):
            if bits >> i & 1:
                A |= 1 << v
                k += 1
        yield p**k * (1 - p) ** (len(ev) - k), A


def default_scheme(g: BipartiteGraph, p=None) -> ExposureScheme:
    """A iid on V_E with probability 1/delta; B = odd vertices with >= 2 neighbours in A."""
    delta = g.require_regular()
    p = Fraction(1, delta) if p is None else Fraction(p)
    items = []
    for w, A in _iid_subsets(g, p):
        B = 0
        for u in g.odd:
            if (g.nbr_masks[u] & A).bit_count() >= 2:
                B |= 1 << u
        items.append((w, A, B))
    return ExposureScheme(g, items, "iid-two-neighbours")


def full_odd_scheme(g: BipartiteGraph, p=None) -> ExposureScheme:
    """Same A, but B is all of V_O (s = 1)."""
    delta = g.require_regular()
    p = Fraction(1, delta) if p is None else Fraction(p)
    return ExposureScheme(g, [(w, A, g.odd_mask) for w, A in _iid_subsets(g, p)], "full-odd")


def exposure_density(delta: int) -> Fraction:
    """1 - (1 - 1/delta)^delta - (1 - 1/delta)^(delta - 1) = P(Bin(delta, 1/delta) >= 2)."""
    if delta < 2:
        raise ValueError("delta must be >= 2")
    q = 1 - Fraction(1, delta)
    return 1 - q**delta - q ** (delta - 1)


def exposure_density_enumerated(delta: int) -> Fraction:
    p = Fraction(1, delta)
    return sum((comb(delta, k) * p**k * (1 - p) ** (delta - k) for k in range(2, delta + 1)), Fraction(0))


def exposure_density_montecarlo(delta: int, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Estimate and standard error of P(at least two of delta coins with bias 1/delta)."""
    hits = rng.binomial(delta, 1 / delta, size=samples) >= 2
    m = hits.mean()
    return float(m), float(math.sqrt(max(m * (1 - m), 1e-300) / samples))


# ---------------------------------------------------------------- distributions


def _configs(dist: FiniteDistribution) -> tuple[np.ndarray, np.ndarray]:
    c = np.asarray(dist.outcomes, dtype=np.uint64).reshape(-1)
    return c, dist.probs


def point_mass(sigma: int = 0) -> FiniteDistribution:
    return FiniteDistribution(np.array([sigma], dtype=np.uint64), np.array([1.0]))


def random_distribution(
    configs: np.ndarray, rng: np.random.Generator, support: int | None = None, alpha: float = 1.0
) -> FiniteDistribution:
    """Dirichlet weights on a random support (all configurations when ``support`` is None)."""
    configs = np.asarray(configs, dtype=np.uint64)
    if support is not None and support < len(configs):
        configs = np.sort(rng.choice(configs, size=support, replace=False))
    w = rng.dirichlet(np.full(len(configs), alpha))
    return FiniteDistribution(configs, w / w.sum())


def phi_distribution(g: BipartiteGraph, dist: FiniteDistribution) -> FiniteDistribution:
    """Law of the coarse field phi (even values and majority extension) under dist."""
    c, p = _configs(dist)
    r = roughness_arrays(g, c)
    full = r.phi_even | r.phi_odd
    keys, inv = np.unique(full, return_inverse=True)
    return FiniteDistribution(keys, np.bincount(inv.reshape(-1), weights=p))


def iid_phi_distribution(g: BipartiteGraph, q: float = 0.5) -> FiniteDistribution:
    """phi_v iid Bernoulli(q) on every vertex; E Phi = 2 q (1 - q)."""
    if g.n > 20:
        raise ValueError("too many vertices for an explicit product table")
    masks = np.arange(1 << g.n, dtype=np.uint64)
    k = popcount(masks)
    p = q**k * (1 - q) ** (g.n - k)
    return FiniteDistribution(masks, p / p.sum())


def mean_roughness_of_phi(g: BipartiteGraph, phi: FiniteDistribution) -> float:
    f, p = _configs(phi)
    return float((p * edge_disagreements(g, f)).sum() / g.num_edges)


# ---------------------------------------------------------------- three-term decomposition


@dataclass
class _SchemeTerms:
    I_total: float
    I_even_given_odd: float
    I_exposed: float  # I(sigma_B | B, A, phi_A)
    S_phi: float  # S(phi_A | A)


def _scheme_terms(g: BipartiteGraph, dist: FiniteDistribution, lam, scheme: ExposureScheme) -> _SchemeTerms:
    c, p = _configs(dist)
    ll = _log(lam)
    pe = phi_even_masks(g, c)
    sizes = popcount(c)
    H_all = _H(c, p)
    H_odd = _H(c & np.uint64(g.odd_mask), p)
    E_even = float((p * popcount(c & np.uint64(g.even_mask))).sum())
    I_total = H_all + ll * float((p * sizes).sum())
    I_ego = H_all - H_odd + ll * E_even
    I_B = 0.0
    S_phi = 0.0
    for w, A, B in scheme.items:
        wf = float(w)
        kA = pe & np.uint64(A)
        kB = c & np.uint64(B)
        hA = _H(kA, p)
        # phi_A lives on V_E and sigma_B on V_O, so OR is a faithful joint key
        I_B += wf * (_H(kA | kB, p) - hA + ll * float((p * popcount(kB)).sum()))
        S_phi += wf * hA
    return _SchemeTerms(I_total, I_ego, I_B, S_phi)


def three_term_check(
    g: BipartiteGraph, dist: FiniteDistribution, lam, scheme: ExposureScheme | None = None, tol: float = TOL
) -> CheckReport:
    """I(sigma) <= I(sigma_E | sigma_O) + (1/s) I(sigma_B | B, A, phi_A) + (1/s) S(phi_A | A).

    When B is all of V_O almost surely the two sides agree, and the report
    is an equality check.
    """
    if scheme is None:
        scheme = default_scheme(g)
    t = _scheme_terms(g, dist, lam, scheme)
    s = float(scheme.s)
    rhs = t.I_even_given_odd + (t.I_exposed + t.S_phi) / s
    full = all(B == g.odd_mask for _, _, B in scheme.items)
    det = dict(
        scheme=scheme.name,
        s=scheme.s,
        I_total=t.I_total,
        I_even_given_odd=t.I_even_given_odd,
        I_exposed=t.I_exposed,
        S_phi=t.S_phi,
        configs=len(dist),
        exposed_sets=len(scheme.items),
    )
    if full:
        return equality("three-term", t.I_total, rhs, tol, **det)
    return inequality("three-term", t.I_total, rhs, tol, **det)


# ---------------------------------------------------------------- gain terms


def two_neighbour_coupling(scheme: ExposureScheme, u: int) -> tuple[bool, Fraction]:
    """Can N(u) cap A, given u in B, be coupled with two iid uniform neighbours
    v1, v2 (not necessarily distinct) so that both lie in it?

    Decided by an exact max-flow; returns (feasible, flow value).
    """
    import networkx as nx

    g = scheme.graph
    nb = [v for v in range(g.n) if g.nbr_masks[u] >> v & 1]
    delta = len(nb)
    law: dict[int, Fraction] = {}
    for w, A, B in scheme.items:
        if B >> u & 1:
            S = A & g.nbr_masks[u]
            law[S] = law.get(S, Fraction(0)) + w
    tot = sum(law.values())
    law = {S: w / tot for S, w in law.items()}
    den = math.lcm(delta * delta, *(w.denominator for w in law.values()))
    G = nx.DiGraph()
    for v1 in nb:
        for v2 in nb:
            G.add_edge("src", ("pair", v1, v2), capacity=den // (delta * delta))
            for S in law:
                if S >> v1 & 1 and S >> v2 & 1:
                    G.add_edge(("pair", v1, v2), ("set", S))
    for S, w in law.items():
        G.add_edge(("set", S), "sink", capacity=int(w * den))
    if "sink" not in G or "src" not in G:
        return False, Fraction(0)
    val = nx.maximum_flow_value(G, "src", "sink")
    return val == den, Fraction(val, den)


def gain_terms_check(
    g: BipartiteGraph,
    dist: FiniteDistribution,
    lam,
    scheme: ExposureScheme | None = None,
    tol: float = TOL,
    coupling_max_degree: int = 4,
) -> CheckReport:
    """The three successive upper bounds on
    I(sigma_E | sigma_O) + (1/s) I(sigma_B | B, A, phi_A) - lamt |V| / 2."""
    delta = g.require_regular()
    if scheme is None:
        scheme = default_scheme(g)
    parts: list[CheckReport] = []
    if delta <= coupling_max_degree:
        bad = [u for u in g.odd if not two_neighbour_coupling(scheme, u)[0]]
        parts.append(inequality("two-neighbour-coupling", len(bad), 0, 0, witness=bad or None))
    c, p = _configs(dist)
    lt = _logp(lam)
    s = scheme.s
    t = _scheme_terms(g, dist, lam, scheme)
    T0 = t.I_even_given_odd + t.I_exposed / float(s) - lt * g.n / 2
    r = roughness_arrays(g, c)
    phat = r.counts / delta  # (configs, |V_O|)
    E_phat = p @ phat
    E_var = p @ (phat * (1 - phat))
    pe = r.phi_even
    prod_terms = []
    for j, u in enumerate(g.odd):
        acc = 0.0
        for w, A, B in scheme.items:
            if B >> u & 1:
                none = (pe & np.uint64(g.nbr_masks[u] & A)) == _U0
                acc += float(w) * float(p[none].sum())
        prod_terms.append(acc / float(s))
    T1 = lt * float(np.sum(np.array(prod_terms) + E_phat - 1))
    T2 = -lt * float(E_var.sum())
    E_Phi = float(p @ r.values)
    T3 = -0.25 * lt * g.n * E_Phi
    parts += [
        inequality("gain-1", T0, T1, tol),
        inequality("gain-2", T1, T2, tol),
        inequality("gain-3", T2, T3, tol),
    ]
    return combine("gain-terms", parts, T0=T0, T1=T1, T2=T2, T3=T3, E_Phi=E_Phi, s=s, scheme=scheme.name)


# ---------------------------------------------------------------- loss term


def exposure_items(scheme: ExposureScheme) -> list[tuple[Fraction, int]]:
    return [(w, A) for w, A, _ in scheme.items]


def loss_term_check(
    g: BipartiteGraph,
    phi: FiniteDistribution,
    A_items: Sequence[tuple[Fraction, int]],
    cert: LocalExpansionCertificate,
    tol: float = TOL,
) -> CheckReport:
    """S(phi_A | A) <= C_LE |V| (2 (p + 1/delta) S(E Phi) + log 2 / (delta M_LE)),
    p the largest inclusion probability of a vertex in A."""
    delta = g.require_regular()
    f, q = _configs(phi)
    incl = {}
    for w, A in A_items:
        for v in range(g.n):
            if A >> v & 1:
                incl[v] = incl.get(v, Fraction(0)) + w
    p = max(incl.values(), default=Fraction(0))
    lhs = sum(float(w) * _H(f & np.uint64(A), q) for w, A in A_items)
    E_Phi = mean_roughness_of_phi(g, phi)
    C_LE, M_LE = float(cert.C_LE), float(cert.M_LE)
    rhs = C_LE * g.n * (2 * (float(p) + 1 / delta) * binary_entropy(min(E_Phi, 1.0)) + math.log(2) / (delta * M_LE))
    return inequality(
        "loss-term", lhs, rhs, tol, p=p, E_Phi=E_Phi, C_LE=cert.C_LE, M_LE=cert.M_LE, outcomes=len(phi)
    )


def simplified_route_check(
    g: BipartiteGraph, phi: FiniteDistribution, source: OrbitSource, q=None, tol: float = TOL
) -> CheckReport:
    """S(phi_{V(T)} | T) <= q |E| S(E Phi) + log 2 for a random dominating tree T
    whose edge probabilities are at most q; then (C_LE, M_LE) = (delta q|E|/|V|, q|E|)
    is checked to be a local-expansion certificate for the same source."""
    delta = g.require_regular()
    eprob = source.edge_probabilities()
    qmax = max(eprob.values())
    parts = []
    if q is None:
        q = qmax
    else:
        q = Fraction(q)
        parts.append(inequality("edge-uniformity", qmax, q, 0))
    f, w = _configs(phi)
    lhs = 0.0
    for wt, edges in source.items:
        vm = 0
        for a, b in edges:
            vm |= 1 << a | 1 << b
        lhs += float(wt) * _H(f & np.uint64(vm), w)
    E_Phi = mean_roughness_of_phi(g, phi)
    rhs = float(q) * g.num_edges * binary_entropy(min(E_Phi, 1.0)) + math.log(2)
    parts.append(inequality("tree-encoding", lhs, rhs, tol, E_Phi=E_Phi))
    M_LE = q * g.num_edges
    C_LE = delta * M_LE / g.n
    cert = LocalExpansionCertificate(C_LE, M_LE, source)
    parts.append(verify_local_expansion(g, cert, mode="exact"))
    return combine("simplified-route", parts, q=q, M_LE=M_LE, C_LE=C_LE)


# ---------------------------------------------------------------- free energy versus roughness


@dataclass
class FitInstance:
    name: str
    graph: BipartiteGraph
    C_LE: float
    M_LE: float
    lam: float
    dist: FiniteDistribution


def _I_and_phi(inst: FitInstance) -> tuple[float, float]:
    c, p = _configs(inst.dist)
    I = _H(c, p) + _log(inst.lam) * float((p * popcount(c)).sum())
    E_Phi = float(p @ roughness_arrays(inst.graph, c).values)
    return I, E_Phi


def _phi_log(x: float) -> float:
    return 0.0 if x <= 0 else x * math.log(math.e / x)


def _I_le_Phi_needed(inst: FitInstance) -> tuple[float, dict]:
    """Smallest C with (1/|V|) I - lamt/2 <= -(1/4) lamt E Phi + (C C_LE/delta)(E Phi log(e/E Phi) + 1/M_LE)."""
    g = inst.graph
    delta = g.require_regular()
    I, E_Phi = _I_and_phi(inst)
    lt = _logp(inst.lam)
    excess = I / g.n - lt / 2 + 0.25 * lt * E_Phi
    scale = inst.C_LE / delta * (_phi_log(E_Phi) + 1 / inst.M_LE)
    return excess / scale, dict(name=inst.name, lam=inst.lam, I=I, E_Phi=E_Phi, excess=excess, scale=scale)


def default_I_le_Phi_instances(seed: int = 0, per_cell: int = 50, lams=(0.5, 1.0, 2.0)) -> list[FitInstance]:
    """{C_4, Z_4^2, Z_2^3} x lam x (random distributions plus the Gibbs measure),
    with the torus certificate C_LE = 12, M_LE = 6 L^d / d."""
    rng = np.random.default_rng(seed)
    out = []
    for L, d in ((4, 1), (4, 2), (2, 3)):
        spec = TorusSpec(L, d)
        g = build_torus(spec)
        configs = enumerate_configs(g)
        C_LE, M_LE = 12.0, 6 * spec.n / d
        for lam in lams:
            out.append(FitInstance(f"Z_{L}^{d} gibbs", g, C_LE, M_LE, lam, exact_distribution(g, lam)))
            for i in range(per_cell):
                k = int(rng.integers(1, len(configs) + 1))
                out.append(
                    FitInstance(f"Z_{L}^{d} random#{i}", g, C_LE, M_LE, lam, random_distribution(configs, rng, k))
                )
    return out


def prop_I_le_Phi_constant_fit(instances: Sequence[FitInstance], tol: float = 1e-12) -> ConstantFit:
    """Smallest C over the grid; certified by re-evaluating every instance with it."""
    grid = []
    for inst in instances:
        need, info = _I_le_Phi_needed(inst)
        info["needed_C"] = need
        grid.append(info)
    worst = max(grid, key=lambda row: row["needed_C"])
    C = max(worst["needed_C"], 0.0)
    certified = True
    for info in grid:
        lhs = info["excess"]
        rhs = C * info["scale"]
        if lhs > rhs + tol * max(1.0, abs(rhs)):
            certified = False
    return ConstantFit("prop-i-le-phi", "C", C, "min", grid, certified, worst)


# ---------------------------------------------------------------- main theorem


def _ratio_exact(zeta_val, lam, half: int):
    if isinstance(zeta_val, Fraction):
        return zeta_val / (1 + Fraction(lam)) ** half
    return float(zeta_val) / (1 + float(lam)) ** half


def main_theorem_study(
    g: BipartiteGraph, lam, r, h=None, configs: np.ndarray | None = None
) -> CheckReport:
    """mu(M > r) <= zeta(M > r) / (1+lam)^(|V|/2), exactly; the constant c in
    zeta(M > r)/(1+lam)^(|V|/2) <= (1+lam)^(-c (h/delta) r) is reported, not asserted."""
    delta = g.require_regular()
    lam = as_fugacity(lam)
    if configs is None:
        configs = enumerate_configs(g)
    if h is None:
        h = cheeger_exact(g).value
    M = min_occupation(g, configs)
    ind = (M > r).astype(np.int64)
    Z = zeta(np.ones(len(configs), dtype=np.int64), configs, lam)
    zB = zeta(ind, configs, lam)
    mu = zB / Z
    half = g.n // 2
    ratio = _ratio_exact(zB, lam, half)
    rep = inequality("main-theorem", mu, ratio, 0 if isinstance(mu, Fraction) else TOL)
    lt = _logp(lam)
    hf = float(h)
    if float(ratio) > 0 and r > 0:
        c_fit = -math.log(float(ratio)) / (lt * hf / delta * float(r))
        exponent = math.log(float(zB)) / lt
    else:
        c_fit = math.inf if float(ratio) == 0 else None
        exponent = -math.inf if float(zB) == 0 else math.log(float(zB)) / lt
    rep.details.update(
        mu=mu,
        zeta=zB,
        Z=Z,
        ratio=ratio,
        h=h,
        r=r,
        lam=lam,
        empirical_exponent=exponent,
        reference_exponent=g.n / 2 - hf / delta * float(r),
        fitted_c=c_fit,
    )
    return rep


def main_theorem_sweep(g: BipartiteGraph, lams: Iterable, r) -> list[dict]:
    configs = enumerate_configs(g)
    h = cheeger_exact(g).value
    rows = []
    for lam in lams:
        rep = main_theorem_study(g, lam, r, h, configs)
        rows.append(
            dict(lam=float(lam), mu=float(rep.details["mu"]), ratio=float(rep.details["ratio"]), passed=rep.passed)
        )
    return rows


def default_main_theorem_grid() -> list[tuple[str, BipartiteGraph, object, int]]:
    out = []
    for name, g in (("Z_4^2", build_torus(TorusSpec(4, 2))), ("Z_2^3", build_torus(TorusSpec(2, 3))),
                    ("Z_2^4", build_torus(TorusSpec(2, 4))), ("C_6", build_torus(TorusSpec(6, 1)))):
        for lam in (Fraction(1), Fraction(2), Fraction(4), Fraction(8)):
            for r in (1, 2):
                if r < g.n // 2:
                    out.append((name, g, lam, r))
    return out


def main_theorem_constant_fit(grid=None, tol: float = 1e-12) -> ConstantFit:
    """Largest c with zeta(M>r)/(1+lam)^(|V|/2) <= (1+lam)^(-c (h/delta) r) on the grid."""
    grid = default_main_theorem_grid() if grid is None else grid
    cache: dict[str, tuple[np.ndarray, object]] = {}
    rows = []
    for name, g, lam, r in grid:
        if name not in cache:
            cache[name] = (enumerate_configs(g), cheeger_exact(g).value)
        configs, h = cache[name]
        rep = main_theorem_study(g, lam, r, h, configs)
        rows.append(
            dict(
                name=name,
                lam=lam,
                r=r,
                h=h,
                delta=g.degree,
                ratio=rep.details["ratio"],
                fitted_c=rep.details["fitted_c"],
                first_inequality=rep.passed,
            )
        )
    finite = [row for row in rows if row["fitted_c"] is not None and math.isfinite(row["fitted_c"])]
    worst = min(finite, key=lambda row: row["fitted_c"]) if finite else None
    c = worst["fitted_c"] if worst else math.inf
    certified = all(row["first_inequality"] for row in rows)
    for row in rows:
        if row["fitted_c"] is None:
            certified = False
            continue
        lt = _logp(row["lam"])
        bound = math.exp(-c * float(row["h"]) / row["delta"] * row["r"] * lt) if math.isfinite(c) else 0.0
        if float(row["ratio"]) > bound * (1 + tol) + tol * 1e-300:
            certified = False
    return ConstantFit("main-theorem-tail", "c", c, "max", rows, certified, worst)


# ---------------------------------------------------------------- free energy


def _log_Z_torus(spec: TorusSpec, lam) -> float:
    if spec.d == 1 or spec.L ** (spec.d - 1) <= 6:
        return partition_transfer_torus(spec, lam).log_z
    return partition_bruteforce(build_torus(spec), lam).log_z


def free_energy_gap(spec: TorusSpec, lam) -> CheckReport:
    """gap = (1/L^d) log Z - (1/2) log(1+lam), asserted >= 0."""
    logz = _log_Z_torus(spec, lam)
    gap = logz / spec.n - 0.5 * _logp(lam)
    return inequality("free-energy-gap", 0.0, gap, TOL, log_z=logz, gap=gap, L=spec.L, d=spec.d, lam=lam)


def free_energy_constant_fit(
    specs: Sequence[TorusSpec] = (TorusSpec(4, 1), TorusSpec(6, 1), TorusSpec(4, 2), TorusSpec(2, 3), TorusSpec(2, 4)),
    lams=(0.5, 1.0, 2.0, 4.0),
    c: float = 1.0,
    tol: float = 1e-12,
) -> ConstantFit:
    """Smallest C with gap <= (C/d)(1+lam)^(-c d) + C/L^d, for a fixed c."""
    rows = []
    for spec in specs:
        for lam in lams:
            gap = free_energy_gap(spec, lam).details["gap"]
            scale = (1 + lam) ** (-c * spec.d) / spec.d + 1 / spec.n
            rows.append(dict(L=spec.L, d=spec.d, lam=lam, gap=gap, scale=scale, needed_C=gap / scale))
    worst = max(rows, key=lambda row: row["needed_C"])
    C = max(worst["needed_C"], 0.0)
    certified = all(row["gap"] <= C * row["scale"] * (1 + tol) for row in rows)
    return ConstantFit("free-energy-per-site", "C", C, "min", rows, certified, worst, {"c": c})


# ---------------------------------------------------------------- binomial tails


def binomial_tail(n: int, p: Fraction, m) -> Fraction:
    """P(|Bin(n, p) - np| >= m), exactly."""
    p = Fraction(p)
    np_ = n * p
    return sum(
        (comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1) if abs(k - np_) >= m),
        Fraction(0),
    )


def _hoeffding_holds(n: int, p: Fraction, m: int, tail: Fraction) -> bool:
    """tail <= 2 (p(1-p))^(m^2/n), decided by comparing n-th powers when close."""
    if tail == 0:
        return True
    lhs = math.log(tail.numerator) - math.log(tail.denominator)
    rhs = math.log(2) + m * m / n * math.log(float(p * (1 - p)))
    if abs(lhs - rhs) > 1e-9 * max(1.0, abs(rhs)):
        return lhs < rhs
    return tail**n <= 2**n * (p * (1 - p)) ** (m * m)


def hoeffding_check(n_max: int = 60, p_grid=None, m_grid=None) -> CheckReport:
    """P(|Bin(n,p) - np| >= m) <= 2 (p(1-p))^(m^2/n) over the whole grid."""
    if n_max > 60:
        raise ValueError("n_max is capped at 60")
    p_grid = [Fraction(k, 10) for k in range(1, 10)] if p_grid is None else [Fraction(p) for p in p_grid]
    points = 0
    violations = []
    worst = None
    for n in range(1, n_max + 1):
        ms = range(n + 1) if m_grid is None else [m for m in m_grid if m <= n]
        for p in p_grid:
            pmf = [comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)]
            for m in ms:
                tail = sum((pmf[k] for k in range(n + 1) if abs(k - n * p) >= m), Fraction(0))
                points += 1
                if not _hoeffding_holds(n, p, m, tail):
                    violations.append((n, str(p), m))
                gap = math.log(2) + m * m / n * math.log(float(p * (1 - p))) - (
                    math.log(float(tail)) if tail > 0 else -math.inf
                )
                if worst is None or gap < worst[0]:
                    worst = (gap, n, str(p), m)
    return inequality(
        "hoeffding",
        len(violations),
        0,
        0,
        witness=violations[:10] or None,
        points=points,
        tightest_log_gap=worst,
    )


def hoeffding_point(n: int, p, m: int) -> CheckReport:
    p = Fraction(p)
    tail = binomial_tail(n, p, m)
    rhs = 2 * float(p * (1 - p)) ** (m * m / n)
    rep = inequality("hoeffding-point", float(tail), rhs, 0)
    rep.passed = _hoeffding_holds(n, p, m, tail)
    rep.details.update(exact_lhs=tail, n=n, p=p, m=m)
    return rep


# ---------------------------------------------------------------- fixed-size model


def fixed_size_chain_check(
    g: BipartiteGraph, N: int, event: Callable[[np.ndarray], np.ndarray], configs: np.ndarray | None = None
) -> CheckReport:
    """mu_N(B) <= |B cap Omega_N| / C(|V|/2, N) = zeta(B cap Omega_N) / (lam^N C(|V|/2, N))
    = zeta(B cap Omega_N) / ((1+lam)^(|V|/2) P(Bin(|V|/2, p) = N)), with p = 2N/|V|
    and lam = p/(1-p). The last link, <= C sqrt|V| zeta(B)/(1+lam)^(|V|/2), carries a
    constant: zeta(B cap Omega_N) <= zeta(B) is checked and the implied C reported."""
    if configs is None:
        configs = enumerate_configs(g)
    half = g.n // 2
    if not 0 < N < half:
        raise ValueError("need 0 < N < |V|/2")
    sizes = popcount(configs)
    omega = configs[sizes == N]
    if len(omega) == 0:
        raise ValueError("no configuration of that size")
    inB = np.asarray(event(configs), dtype=bool)
    nB = int((inB & (sizes == N)).sum())
    p = Fraction(2 * N, g.n)
    lam = p / (1 - p)
    muN = Fraction(nB, len(omega))
    binom_count = comb(half, N)
    link1 = Fraction(nB, binom_count)
    zBN = Fraction(nB) * lam**N
    link2 = zBN / (lam**N * binom_count)
    pbin = comb(half, N) * p**N * (1 - p) ** (half - N)
    link3 = zBN / ((1 + lam) ** half * pbin)
    zB = zeta(inB.astype(np.int64), configs, lam)
    parts = [
        inequality("omega-count", Fraction(binom_count), Fraction(len(omega)), 0),
        inequality("fixed-size-1", muN, link1, 0),
        equality("fixed-size-2", link1, link2, 0),
        equality("fixed-size-3", link2, link3, 0),
        inequality("fixed-size-4", zBN, zB, 0),
    ]
    implied_C = 1 / (math.sqrt(g.n) * float(pbin))
    return combine(
        "fixed-size-chain",
        parts,
        N=N,
        lam=lam,
        mu_N=muN,
        omega_N=len(omega),
        binomial_point=pbin,
        implied_C=implied_C,
        final_bound=implied_C * math.sqrt(g.n) * float(zB) / float(1 + lam) ** half,
    )


# ---------------------------------------------------------------- torus corollary


def corollary_torus_study(spec: TorusSpec, lam, C0, configs: np.ndarray | None = None) -> CheckReport:
    """mu(B) <= zeta(B)/(1+lam)^(L^d/2) exactly, for the bad event of
    ``bad_event_torus``; the proof's sandwich L^d/2 - 2d|sigma_O| <= |phi_E| <= L^d/2
    is checked on every configuration. The C_2 in the second inequality is fitted."""
    g = build_torus(spec)
    if configs is None:
        configs = enumerate_configs(g)
    lam = as_fugacity(lam)
    ind = bad_event_torus(configs, spec, float(lam), C0, g).astype(np.int64)
    Z = zeta(np.ones(len(configs), dtype=np.int64), configs, lam)
    zB = zeta(ind, configs, lam)
    mu = zB / Z
    half = spec.n // 2
    ratio = _ratio_exact(zB, lam, half)
    exact = isinstance(mu, Fraction)
    first = inequality("torus-bad-event", mu, ratio, 0 if exact else TOL)
    phi_e = popcount(phi_even_masks(g, configs))
    odd = popcount(configs & np.uint64(g.odd_mask))
    low = half - 2 * spec.d * odd
    sandwich_bad = int(((phi_e < low) | (phi_e > half)).sum())
    sandwich = inequality("phi-sandwich", sandwich_bad, 0, 0, witness=None)
    if sandwich_bad:
        sandwich.witness = int(configs[np.argmax((phi_e < low) | (phi_e > half))])
    rf = float(ratio)
    lt = _logp(lam)
    if rf <= 0:
        C2 = -math.inf
    elif rf >= 1 or spec.d < 2:
        C2 = None
    else:
        C2 = math.log(spec.n * lt / -math.log(rf)) / math.log(spec.d)
    return combine(
        "corollary-torus",
        [first, sandwich],
        mu=mu,
        zeta=zB,
        ratio=ratio,
        bad_configs=int(ind.sum()),
        threshold=spec.L ** (spec.d + 1) / spec.d**C0,
        fitted_C2=C2,
        L=spec.L,
        d=spec.d,
        lam=lam,
        C0=C0,
    )


def default_corollary_grid() -> list[tuple[TorusSpec, object, float]]:
    out = []
    for spec, C0s in ((TorusSpec(4, 2), (3.5, 4.0, 5.0)), (TorusSpec(2, 3), (1.5, 2.0, 2.5))):
        for lam in (Fraction(1), Fraction(2), Fraction(4)):
            for C0 in C0s:
                out.append((spec, lam, C0))
    return out


def corollary_torus_constant_fit(grid=None, tol: float = 1e-12) -> ConstantFit:
    """Smallest C_2 with zeta(B)/(1+lam)^(L^d/2) <= (1+lam)^(-L^d/d^C_2) on the grid."""
    grid = default_corollary_grid() if grid is None else grid
    cache: dict[tuple, np.ndarray] = {}
    rows = []
    for spec, lam, C0 in grid:
        key = (spec.L, spec.d)
        if key not in cache:
            cache[key] = enumerate_configs(build_torus(spec))
        rep = corollary_torus_study(spec, lam, C0, cache[key])
        rows.append(
            dict(
                L=spec.L,
                d=spec.d,
                lam=lam,
                C0=C0,
                ratio=rep.details["ratio"],
                fitted_C2=rep.details["fitted_C2"],
                checks_passed=rep.passed,
            )
        )
    usable = [row for row in rows if row["fitted_C2"] is not None]
    worst = max(usable, key=lambda row: row["fitted_C2"]) if usable else None
    C2 = worst["fitted_C2"] if worst else math.inf
    certified = len(usable) == len(rows) and all(row["checks_passed"] for row in rows)
    for row in usable:
        n = row["L"] ** row["d"]
        bound = (1 + float(row["lam"])) ** (-n / row["d"] ** C2) if math.isfinite(C2) else 1.0
        if float(row["ratio"]) > bound * (1 + tol):
            certified = False
    return ConstantFit("torus-bad-event-tail", "C2", C2, "min", rows, certified, worst)


# ---------------------------------------------------------------- bad face events


def halfspace_K(spec: ReflectionGroupSpec, face: int = 0, eps: int = -1) -> int:
    """Union over the reflection group of the images of (face of the block) and
    the minority class (V_O for eps = -1, V_E for eps = +1), as a bitmask."""
    tor = spec.torus
    axis, side = [(i, s) for i in range(spec.d) for s in (0, spec.ell)][face]
    H = [x for x in block_sites(spec) if x[axis] == side]
    K = 0
    for v in range(tor.n):
        if sum(torus_coords(v, tor.L, tor.d)) % 2 == (1 if eps == -1 else 0):
            K |= 1 << v
    for t in group_elements(spec):
        for x in H:
            K |= 1 << t.apply(torus_index(x, tor.L))
    return K


def bad_norm_halfspace_check(
    lam, ell: int = 3, d: int = 2, face: int = 0, eps: int = -1, c_alpha=Fraction(1, 100), tol: float = 1e-9
) -> CheckReport:
    """log zeta(tilde B) = I(sigma | tilde B) <= sum_v I(sigma_v | tilde B)
    <= |K| (S(p_K) + p_K log lam) + |K^c| lamt, with tilde B the configurations
    on which every reflected copy of 1_{B_{H,eps}} equals 1; and on tilde B the
    weighted bound |sigma_K| < 2^d 3 alpha via the reflection sums."""
    spec = ReflectionGroupSpec(ell, 2 * ell, d)
    lam = as_fugacity(lam)
    phase = phase_observable(spec, lam, c_alpha)
    obs = phase.face_eps(face, eps)
    els = group_elements(spec)
    cfg = torus_configs(spec)
    inside = np.ones(len(cfg), dtype=bool)
    for t in els:
        inside &= obs(cfg, t) == 1
    K = halfspace_K(spec, face, eps)
    nK = K.bit_count()
    n = spec.torus.n
    det: dict = dict(K_size=nK, K_size_formula=(Fraction(1, 2) + Fraction(1, 4 * ell)) * (2 * ell) ** d)
    B = cfg[inside]
    det["tilde_B_size"] = len(B)
    det["omega_size"] = len(cfg)
    if len(B) == 0:
        return inequality("bad-norm-halfspace", 0, 0, 0, vacuous=True, **det)
    # exact law on tilde B
    sizes = popcount(B)
    zB = zeta(np.ones(len(B), dtype=np.int64), B, lam)
    kB = popcount(B & np.uint64(K))
    EK = zeta(kB.astype(np.int64), B, lam) / zB
    pK = EK / nK
    det.update(zeta=zB, p_K=pK)
    # floating entropies of the conditioned Gibbs law
    logw = sizes * _log(lam)
    w = np.exp(logw - logw.max())
    pr = w / w.sum()
    log_zeta = math.log(float(zB)) if not isinstance(zB, float) else math.log(zB)
    I_B = _H(B, pr) + _log(lam) * float(pr @ sizes)
    site_I = []
    for v in range(n):
        pv = float(pr[((B >> np.uint64(v)) & np.uint64(1)) == 1].sum())
        site_I.append(binary_entropy(min(max(pv, 0.0), 1.0)) + pv * _log(lam))
    inK = [v for v in range(n) if K >> v & 1]
    outK = [v for v in range(n) if not K >> v & 1]
    sum_K = sum(site_I[v] for v in inK)
    sum_Kc = sum(site_I[v] for v in outK)
    pKf = float(pK)
    bound_K = nK * (binary_entropy(pKf) + pKf * _log(lam))
    bound_Kc = len(outK) * _logp(lam)
    # weighted implication chain, exact with weights scaled by 2^d
    sites = block_sites(spec)
    scale = 2**d
    W = np.array([int(weight(x, ell) * scale) for x in sites], dtype=np.int64)
    site_idx = [torus_index(x, spec.L) for x in sites]
    bits_K = np.array([K >> i & 1 for i in site_idx], dtype=bool)
    a2 = Fraction(phase.alpha) * scale
    total = np.zeros(len(B), dtype=np.int64)
    per_tau_bad = 0
    for t in els:
        pats = patterns(spec, B, t).astype(np.int64)
        bits = (pats[:, None] >> np.arange(len(sites))[None, :]) & 1
        wk = (bits * (W * bits_K)).sum(axis=1)
        per_tau_bad += int((wk * a2.denominator >= 3 * a2.numerator).sum())
        total += wk
    # sum over tau of weighted |sigma tau|_K equals |sigma_K| (scaled by 2^d)
    sums_bad = int((total != scale * kB).sum())
    impl_bad = int((kB * a2.denominator >= scale * 3 * a2.numerator).sum())
    parts = [
        equality("log-zeta-is-I", log_zeta, I_B, tol),
        inequality("subadditivity", I_B, sum_K + sum_Kc, tol),
        inequality("concavity-on-K", sum_K, bound_K, tol),
        inequality("site-bound-off-K", sum_Kc, bound_Kc, tol),
        inequality("per-reflection-K-weight", per_tau_bad, 0, 0),
        inequality("reflection-sum", sums_bad, 0, 0),
        inequality("K-occupation-below-6alpha", impl_bad, 0, 0),
        inequality("K-size", Fraction(nK), det["K_size_formula"], 0),
        inequality("K-size-rev", det["K_size_formula"], Fraction(nK), 0),
    ]
    return combine("bad-norm-halfspace", parts, log_zeta=log_zeta, bound=bound_K + bound_Kc, vacuous=False, **det)


# ---------------------------------------------------------------- tree threshold


def weitz_threshold(Delta: int) -> Fraction:
    """(Delta-1)^(Delta-1) / (Delta-2)^Delta."""
    if Delta < 3:
        raise ValueError("Delta must be >= 3")
    return Fraction((Delta - 1) ** (Delta - 1), (Delta - 2) ** Delta)


def weitz_asymptote(Delta: int) -> float:
    """lam_Delta * Delta / e, which tends to 1."""
    t = weitz_threshold(Delta)
    return math.exp(
        (Delta - 1) * math.log(Delta - 1) - Delta * math.log(Delta - 2) + math.log(Delta) - 1
    ) if Delta > 50 else float(t) * Delta / math.e


# ---------------------------------------------------------------- gadgets and blow-ups


def _pmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of bivariate polynomials stored as 2-d object arrays."""
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=object)
    for i, j in zip(*np.nonzero(b)):
        out[i : i + a.shape[0], j : j + a.shape[1]] += a * b[i, j]
    return out


def _padd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((max(a.shape[0], b.shape[0]), max(a.shape[1], b.shape[1])), dtype=object)
    out[: a.shape[0], : a.shape[1]] += a
    out[: b.shape[0], : b.shape[1]] += b
    return out


def _mono(i: int, j: int, c: int = 1) -> np.ndarray:
    out = np.zeros((i + 1, j + 1), dtype=object)
    out[i, j] = c
    return out


def _ppow(a: np.ndarray, k: int) -> np.ndarray:
    out = _mono(0, 0)
    for _ in range(k):
        out = _pmul(out, a)
    return out


def bivariate_polynomial(g: BipartiteGraph, configs: np.ndarray | None = None) -> np.ndarray:
    """coef[i, j] = number of independent sets with i even and j odd vertices."""
    if configs is None:
        configs = enumerate_configs(g)
    e = popcount(configs & np.uint64(g.even_mask))
    o = popcount(configs & np.uint64(g.odd_mask))
    out = np.zeros((len(g.even) + 1, len(g.odd) + 1), dtype=np.int64)
    np.add.at(out, (e, o), 1)
    return out.astype(object)


def gadget_interior_polynomials(m: int) -> dict[tuple[int, int], np.ndarray]:
    """Bivariate polynomials of the interior of the m-block linear gadget given
    the states of its endpoints (even endpoint first, odd endpoint second).

    Classes along a block from the even endpoint: x odd, a b even, c d odd,
    y even; the odd endpoint hangs off the last y.
    """
    block = []  # (x, y, even count, odd count)
    for bits in range(64):
        x, a, b, c, d, y = ((bits >> k) & 1 for k in range(6))
        if x and (a or b):
            continue
        if (a or b) and (c or d):
            continue
        if y and (c or d):
            continue
        block.append((x, y, a + b + y, x + c + d))
    out = {}
    for sl in (0, 1):
        state = {sl: _mono(0, 0)}
        for _ in range(m):
            nxt: dict[int, np.ndarray] = {}
            for prev, poly in state.items():
                for x, y, ne, no in block:
                    if prev and x:
                        continue
                    t = _pmul(poly, _mono(ne, no))
                    nxt[y] = _padd(nxt[y], t) if y in nxt else t
            state = nxt
        for sr in (0, 1):
            acc = _mono(0, 0, 0)
            for y, poly in state.items():
                if not (y and sr):
                    acc = _padd(acc, poly)
            out[(sl, sr)] = acc
    return out


def stretched_complete_bipartite_polynomial(a: int, b: int, m: int) -> np.ndarray:
    """Bivariate polynomial of K_{a,b} with every edge replaced by the m-block gadget
    (even side of size a). Uses Z = sum_k C(a,k) X^k Q_k^b with
    Q_k = sum_s Y^s P_{1s}^k P_{0s}^(a-k)."""
    P = gadget_interior_polynomials(m)
    total = _mono(0, 0, 0)
    for k in range(a + 1):
        Q = _mono(0, 0, 0)
        for s in (0, 1):
            term = _pmul(_ppow(P[(1, s)], k), _ppow(P[(0, s)], a - k))
            Q = _padd(Q, _pmul(term, _mono(0, s)))
        total = _padd(total, _pmul(_ppow(Q, b), _mono(k, 0, comb(a, k))))
    return total


def blowup_equivalence_check(F: BipartiteGraph, m: int, lam) -> CheckReport:
    """Z of the m-blow-up of F at lam equals Z of F at (1+lam)^m - 1."""
    lam = Fraction(lam)
    zF = partition_bruteforce(F, (1 + lam) ** m - 1).exact
    zG = partition_bruteforce(blow_up(F, m), lam).exact
    return equality("blowup-equivalence", zG, zF, 0, m=m, graph=F.name)


def _copy_sum_tails(b: int, lam: float, amax: int, thr: Fraction) -> np.ndarray:
    """T[a] = P(S_a > thr), S_a a sum of a iid copy counts with law C(b,k) lam^k / lam' on 1..b."""
    k = np.arange(b + 1)
    r = np.array([comb(b, int(j)) * lam**j if j else 0.0 for j in k])
    r /= r.sum()
    out = np.zeros(amax + 1)
    law = np.array([1.0])
    cut = math.floor(thr) + 1  # smallest integer strictly above thr
    for a in range(amax + 1):
        out[a] = law[cut:].sum() if cut < len(law) else 0.0
        law = np.convolve(law, r)
    return out


def balanced_probability_blowup(poly: np.ndarray, n_reduced: int, b: int, lam) -> float:
    """mu(E_Bal) on the b-blow-up of a graph with bivariate polynomial ``poly``
    and ``n_reduced`` vertices, via the reduced model at lam' = (1+lam)^b - 1."""
    lamf = float(lam)
    lam_red = (1 + lamf) ** b - 1
    n = n_reduced * b
    thr = Fraction(1, 10) * Fraction(lamf) / (1 + Fraction(lamf)) * n
    ii, jj = np.nonzero(poly)
    logc = np.array([math.log(int(poly[i, j])) for i, j in zip(ii, jj)])
    logw = logc + (ii + jj) * math.log(lam_red)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    T = _copy_sum_tails(b, lamf, int(max(poly.shape)), thr)
    return float((w * T[ii] * T[jj]).sum())


def balanced_probability_direct(g: BipartiteGraph, lam) -> float:
    return exact_distribution(g, lam).prob(lambda c: balanced_event(c, g, lam))


def gadget_reduction_check(b: int = 2, lams=(0.25, 0.5, 1.0), tol: float = 1e-10) -> CheckReport:
    """The reduced computation of mu(E_Bal) against enumeration of the b-blow-up
    of the one-block gadget (K_2 stretched once), plus the stretched-K_{a,b}
    polynomial against enumeration for K_{1,1}, K_{1,2} and K_{2,2}."""
    parts = []
    for a, c in ((1, 1), (1, 2), (2, 2)):
        H = complete_bipartite(a, c)
        Hs = stretch_by_gadget(H, 1)
        direct = bivariate_polynomial(Hs)
        formula = stretched_complete_bipartite_polynomial(a, c, 1)
        ok = direct.shape == formula.shape and bool((direct == formula).all())
        parts.append(inequality(f"stretched-K{a}{c}-polynomial", 0 if ok else 1, 0, 0))
    L1 = build_linear_gadget(1).graph
    poly = bivariate_polynomial(L1)
    G = blow_up(L1, b)
    for lam in lams:
        parts.append(
            equality(
                f"reduced-balance-lam={lam}",
                balanced_probability_blowup(poly, L1.n, b, lam),
                balanced_probability_direct(G, lam),
                tol,
            )
        )
    return combine("gadget-reduction", parts, b=b)


def gadget_threshold_scan(delta: int, lams: Iterable, m: int = 1) -> list[dict]:
    """mu(E_Bal) on the delta/3-blow-up of K_{3,3} stretched by the m-block gadget
    (a delta-regular bipartite graph), one row per fugacity."""
    if delta % 3:
        raise ValueError("delta must be a multiple of 3")
    b = delta // 3
    poly = stretched_complete_bipartite_polynomial(3, 3, m)
    n_red = 6 + 9 * 6 * m
    rows = []
    for lam in lams:
        lamf = float(lam)
        rows.append(
            dict(
                delta=delta,
                m=m,
                lam=lamf,
                lam_reduced=(1 + lamf) ** b - 1,
                lam_over_log_ratio=lamf * delta / math.log(delta) if delta > 1 else None,
                vertices=n_red * b,
                mu_balanced=balanced_probability_blowup(poly, n_red, b, lamf),
            )
        )
    return rows
