"""Cheeger constants, local expansion certificates and random-walk Green
functions on small regular graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .graphs import (
    BipartiteGraph,
    TorusSpec,
    all_torus_automorphisms,
    build_torus,
    dominating_set_torus,
    dominating_tree,
)
from .report import CheckReport, combine, inequality

CHEEGER_CAP = 22
GREEN_EXACT_CAP = 32
WILSON_Z99 = 2.5758293035489004

Edge = tuple[int, int]


class PremiseError(ValueError):
    """A lemma's hypothesis fails on the given instance."""


# ---------------------------------------------------------------- Cheeger


@dataclass(frozen=True)
class CheegerResult:
    value: Fraction
    witness: tuple[int, ...] | None
    method: str


def _boundary_sizes(g: BipartiteGraph, masks: np.ndarray) -> np.ndarray:
    out = np.zeros(len(masks), dtype=np.int64)
    one = np.uint64(1)
    for u, v in g.edges:
        out += (((masks >> np.uint64(u)) ^ (masks >> np.uint64(v))) & one).astype(np.int64)
    return out


def cheeger_exact(g: BipartiteGraph, cap: int = CHEEGER_CAP) -> CheegerResult:
    """min |boundary(A)| / |A| over nonempty A with |A| <= |V|/2, by exhaustion.

    Ties are broken towards the smallest bitmask.
    """
    if g.n > cap:
        raise ValueError(
            f"{g.n} vertices exceeds the Cheeger cap {cap}; use cheeger_torus_transfer "
            "for tori or the bound 1/L"
        )
    if not g.is_connected():
        raise ValueError("graph is not connected")
    best: tuple[Fraction, int] | None = None
    total = 1 << g.n
    chunk = 1 << 18
    for start in range(1, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        size = np.bitwise_count(masks).astype(np.int64)
        keep = 2 * size <= g.n
        masks, size = masks[keep], size[keep]
        if not len(masks):
            continue
        bd = _boundary_sizes(g, masks)
        ratio = bd / size
        r = ratio.min()
        cand = np.nonzero(ratio <= r + 1e-12)[0]
        for i in cand:
            val = Fraction(int(bd[i]), int(size[i]))
            m = int(masks[i])
            if best is None or val < best[0] or (val == best[0] and m < best[1]):
                best = (val, m)
    val, m = best
    return CheegerResult(val, tuple(v for v in range(g.n) if m >> v & 1), "exhaustive")


def cheeger_torus_transfer(spec: TorusSpec, slice_cap: int = 6) -> CheegerResult:
    """Exact Cheeger constant of Z_L^d (L >= 3) by dynamic programming over slices.

    For every first slice s0 and every running slice state the minimal
    boundary size is tracked per total size; closing the cycle adds the
    boundary between the last slice and s0. No witness is reconstructed.
    """
    L, d = spec.L, spec.d
    if L < 3:
        raise ValueError("use cheeger_exact for L = 2")
    w = L ** (d - 1)
    if w > slice_cap:
        raise ValueError(f"slice of {w} vertices exceeds the cap {slice_cap}")
    S = 1 << w
    states = np.arange(S, dtype=np.uint64)
    size = np.bitwise_count(states).astype(np.int64)
    if d == 1:
        intra = np.zeros(S, dtype=np.int64)
    else:
        sl = build_torus(TorusSpec(L, d - 1))
        intra = _boundary_sizes(sl, states)
    cross = np.bitwise_count(states[:, None] ^ states[None, :]).astype(np.int64)
    n = spec.n
    K = n + 1
    INF = np.int64(1 << 40)
    best = np.full((S, S, K), INF, dtype=np.int64)
    for s0 in range(S):
        best[s0, s0, size[s0]] = intra[s0]
    for _ in range(L - 1):
        new = np.full_like(best, INF)
        for t in range(S):
            cand = (best + cross[:, t][None, :, None]).min(axis=1)
            k = size[t]
            new[:, t, k:] = np.minimum(new[:, t, k:], cand[:, : K - k] + intra[t])
        best = new
    closing = best + cross.T[:, :, None]
    per_size = closing.min(axis=(0, 1))
    val = None
    for k in range(1, n // 2 + 1):
        if per_size[k] < INF:
            f = Fraction(int(per_size[k]), k)
            val = f if val is None or f < val else val
    return CheegerResult(val, None, "slice-dp")


def torus_cheeger_bound(spec: TorusSpec) -> Fraction:
    """1/L, a lower bound for the Cheeger constant of Z_L^d."""
    return Fraction(1, spec.L)


# ---------------------------------------------------------------- local expansion


def _norm_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def _cover(g: BipartiteGraph, edges: Iterable[Edge]) -> int:
    """Bitmask of vertices v with N(v) meeting the vertex set of the edges."""
    verts = 0
    for u, v in edges:
        verts |= (1 << u) | (1 << v)
    return sum(1 << x for x in range(g.n) if g.nbr_masks[x] & verts)


class SubgraphSource:
    """Distribution over connected subgraphs T, given by their edge sets."""

    exact: bool = False
    description: str = ""

    def edge_probabilities(self) -> dict[Edge, Fraction]:
        raise NotImplementedError

    def cover_probabilities(self) -> list[Fraction]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> frozenset[Edge]:
        raise NotImplementedError


@dataclass
class OrbitSource(SubgraphSource):
    """Finite weighted list of edge sets."""

    graph: BipartiteGraph
    items_factory: Callable[[], list[tuple[Fraction, frozenset[Edge]]]]
    description: str = "finite orbit"
    exact: bool = True

    @cached_property
    def items(self) -> list[tuple[Fraction, frozenset[Edge]]]:
        items = self.items_factory()
        if sum(w for w, _ in items) != 1:
            raise ValueError("orbit weights must sum to 1")
        return items

    def edge_probabilities(self) -> dict[Edge, Fraction]:
        out = {e: Fraction(0) for e in self.graph.edges}
        for w, es in self.items:
            for e in es:
                out[e] += w
        return out

    def cover_probabilities(self) -> list[Fraction]:
        out = [Fraction(0)] * self.graph.n
        for w, es in self.items:
            c = _cover(self.graph, es)
            for v in range(self.graph.n):
                if c >> v & 1:
                    out[v] += w
        return out

    def sample(self, rng: np.random.Generator) -> frozenset[Edge]:
        # Uniform orbits are the common case; fall back to weighted choice.
        ws = np.array([float(w) for w, _ in self.items])
        return self.items[int(rng.choice(len(ws), p=ws / ws.sum()))][1]


@dataclass
class SamplerSource(SubgraphSource):
    """Subgraph law known only through a sampler (Monte Carlo verification only)."""

    graph: BipartiteGraph
    sampler: Callable[[np.random.Generator], frozenset[Edge]]
    description: str = "sampler"
    exact: bool = False

    def sample(self, rng: np.random.Generator) -> frozenset[Edge]:
        return self.sampler(rng)


def _int_matrix(g: BipartiteGraph, big: bool) -> np.ndarray:
    A = np.zeros((g.n, g.n), dtype=object if big else np.int64)
    for u, v in g.edges:
        A[u, v] = A[v, u] = 1
    return A


def _walk_count(A: np.ndarray, start: np.ndarray, steps: int) -> int:
    """Number of walks of ``steps`` steps from ``start`` vertices using A's edges."""
    x = start.copy()
    for _ in range(steps):
        x = A @ x
    return int(x.sum())


@dataclass
class WalkTraceSource(SubgraphSource):
    """Edges of a simple random walk W_0..W_{M0-1} started at a uniform vertex."""

    graph: BipartiteGraph
    M0: int
    description: str = "random walk trace"
    exact: bool = True

    def _big(self) -> bool:
        d = self.graph.require_regular()
        return self.graph.n * float(d) ** self.M0 > 2.0**62

    def _total(self) -> int:
        return self.graph.n * self.graph.degree ** (self.M0 - 1)

    def edge_probabilities(self) -> dict[Edge, Fraction]:
        g = self.graph
        big = self._big()
        A = _int_matrix(g, big)
        ones = np.ones(g.n, dtype=A.dtype)
        out = {}
        for u, v in g.edges:
            A[u, v] = A[v, u] = 0
            avoid = _walk_count(A, ones, self.M0 - 1)
            A[u, v] = A[v, u] = 1
            out[(u, v)] = 1 - Fraction(avoid, self._total())
        return out

    def cover_probabilities(self) -> list[Fraction]:
        g = self.graph
        big = self._big()
        A = _int_matrix(g, big)
        out = []
        for v in range(g.n):
            keep = np.ones(g.n, dtype=A.dtype)
            for u in g.adjacency[v]:
                keep[u] = 0
            Ak = A * np.outer(keep, keep)
            avoid = _walk_count(Ak, keep, self.M0 - 1)
            out.append(1 - Fraction(avoid, self._total()))
        return out

    def sample(self, rng: np.random.Generator) -> frozenset[Edge]:
        g = self.graph
        w = int(rng.integers(0, g.n))
        es = set()
        for _ in range(self.M0 - 1):
            nb = g.adjacency[w]
            x = nb[int(rng.integers(0, len(nb)))]
            es.add(_norm_edge(w, x))
            w = x
        return frozenset(es)


@dataclass
class LocalExpansionCertificate:
    C_LE: Fraction
    M_LE: Fraction
    source: SubgraphSource
    details: dict = field(default_factory=dict)


def torus_automorphism_orbit(
    spec: TorusSpec, edges: Iterable[Edge]
) -> Callable[[], list[tuple[Fraction, frozenset[Edge]]]]:
    edges = tuple(edges)

    def factory() -> list[tuple[Fraction, frozenset[Edge]]]:
        auts = list(all_torus_automorphisms(spec))
        w = Fraction(1, len(auts))
        return [(w, a.apply_edges(edges)) for a in auts]

    return factory


def torus_local_expansion_certificate(spec: TorusSpec) -> LocalExpansionCertificate:
    """C_LE = 12, M_LE = 6 L^d / d with a dominating tree pushed by a uniform automorphism."""
    g = build_torus(spec)
    D = dominating_set_torus(spec)
    tree = dominating_tree(g, D)
    src = OrbitSource(g, torus_automorphism_orbit(spec, tree.edges), "dominating tree orbit")
    return LocalExpansionCertificate(
        Fraction(12),
        Fraction(6 * spec.n, spec.d),
        src,
        {"dominating_set": D, "tree_vertices": len(tree.vertices), "tree_edges": tree.edges},
    )


def wilson_interval(k: int, n: int, z: float = WILSON_Z99) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def verify_local_expansion(
    g: BipartiteGraph,
    cert: LocalExpansionCertificate,
    mode: str = "exact",
    samples: int = 10_000,
    seed: int = 0,
) -> CheckReport:
    """Both items of the local expansion definition.

    Item 1: |E| P(uv in E(T)) <= M_LE for every edge. Item 2:
    |V| P(N(v) meets V(T)) >= delta M_LE / C_LE for every vertex. Monte Carlo
    mode uses 99% Wilson intervals and flags an item only when the interval
    excludes the claimed bound.
    """
    delta = g.require_regular()
    E, V = g.num_edges, g.n
    target2 = Fraction(delta) * cert.M_LE / cert.C_LE
    if mode == "exact":
        if not cert.source.exact:
            raise ValueError("exact mode needs an enumerable subgraph distribution")
        ep = cert.source.edge_probabilities()
        cp = cert.source.cover_probabilities()
        worst_e = max(ep, key=lambda e: ep[e])
        worst_v = min(range(V), key=lambda v: cp[v])
        item1 = inequality("local-expansion:item1", E * ep[worst_e], cert.M_LE, 0, witness=worst_e, edge=worst_e)
        item2 = inequality("local-expansion:item2", target2, V * cp[worst_v], 0, witness=worst_v, vertex=worst_v)
        return combine("local-expansion", [item1, item2], mode=mode, source=cert.source.description)
    if mode != "montecarlo":
        raise ValueError("mode must be 'exact' or 'montecarlo'")
    rng = np.random.default_rng(seed)
    ecount = {e: 0 for e in g.edges}
    vcount = [0] * V
    for _ in range(samples):
        es = cert.source.sample(rng)
        for e in es:
            ecount[e] += 1
        c = _cover(g, es)
        for v in range(V):
            vcount[v] += c >> v & 1
    worst_e = max(ecount, key=lambda e: ecount[e])
    lo_e, hi_e = wilson_interval(ecount[worst_e], samples)
    worst_v = min(range(V), key=lambda v: vcount[v])
    lo_v, hi_v = wilson_interval(vcount[worst_v], samples)
    item1 = inequality("local-expansion:item1", E * lo_e, float(cert.M_LE), 1e-12, witness=worst_e, interval=(E * lo_e, E * hi_e))
    item2 = inequality("local-expansion:item2", float(target2), V * hi_v, 1e-12, witness=worst_v, interval=(V * lo_v, V * hi_v))
    return combine("local-expansion", [item1, item2], mode=mode, samples=samples, source=cert.source.description)


# ---------------------------------------------------------------- Green function


@dataclass(frozen=True)
class GreenTable:
    """g[u, w] = sum_{i < M0} P^i(u, w) for the simple random walk.

    Exact tables hold integer numerators over the common denominator
    delta^(M0-1); inexact tables store floats with denominator 1.
    """

    M0: int
    numer: np.ndarray
    denom: int
    exact: bool

    def value(self, u: int, w: int) -> Fraction | float:
        if self.exact:
            return Fraction(int(self.numer[u, w]), self.denom)
        return float(self.numer[u, w])

    def as_float(self) -> np.ndarray:
        return np.asarray(self.numer, dtype=np.float64) / self.denom


def green_table(g: BipartiteGraph, M0: int, exact: bool | None = None) -> GreenTable:
    delta = g.require_regular()
    if M0 < 1:
        raise ValueError("M0 must be >= 1")
    if exact is None:
        exact = g.n <= GREEN_EXACT_CAP
    if not exact:
        P = _int_matrix(g, False).astype(np.float64) / delta
        acc = np.eye(g.n)
        cur = np.eye(g.n)
        for _ in range(M0 - 1):
            cur = cur @ P
            acc += cur
        return GreenTable(M0, acc, 1, False)
    big = g.n * float(delta) ** M0 > 2.0**62
    A = _int_matrix(g, big)
    eye = np.eye(g.n, dtype=np.int64).astype(A.dtype)
    # Horner: N = sum_i A^i delta^(M0-1-i)
    N = eye.copy()
    for j in range(1, M0):
        N = A @ N + eye * delta**j
    return GreenTable(M0, N, delta ** (M0 - 1), True)


def check_green_positivity(t: GreenTable, g: BipartiteGraph) -> CheckReport:
    """g_uw <= sqrt((g_uu - 1)(g_ww - 1)) for distinct u, w in the same class."""
    if g.parity is None:
        raise ValueError("graph must be bipartite")
    D = t.denom
    worst = None
    for cls in (g.even, g.odd):
        for i, u in enumerate(cls):
            for w in cls[i + 1 :]:
                if t.exact:
                    a = int(t.numer[u, u]) - D
                    b = int(t.numer[w, w]) - D
                    c = int(t.numer[u, w])
                    slack = Fraction(a * b - c * c, D * D)
                else:
                    a = t.numer[u, u] - 1
                    b = t.numer[w, w] - 1
                    c = t.numer[u, w]
                    slack = a * b - c * c
                if worst is None or slack < worst[0]:
                    worst = (slack, u, w)
    if worst is None:
        return inequality("green-positivity", 0, 0, 0)
    slack, u, w = worst
    lhs = t.value(u, w)
    rhs = math.sqrt(max(0.0, float((t.value(u, u) - 1) * (t.value(w, w) - 1))))
    ok = slack >= 0 if t.exact else slack >= -1e-12
    return CheckReport(
        "green-positivity", lhs, rhs, slack, bool(ok), 0.0 if t.exact else 1e-12,
        None if ok else (u, w), 0.0, {"pair": (u, w), "squared_slack": slack},
    )


def path_vert_check(g: BipartiteGraph, M0: int, C0) -> CheckReport:
    """P(W meets N(v)) >= (M0/C0) (delta/|V|) for every v, by exact avoidance counts."""
    delta = g.require_regular()
    cp = WalkTraceSource(g, M0).cover_probabilities()
    bound = Fraction(M0) / Fraction(C0) * Fraction(delta, g.n)
    v = min(range(g.n), key=lambda x: cp[x])
    return inequality("path-vert", bound, cp[v], 0, witness=v, vertex=v)


def local_expansion_from_walk(
    g: BipartiteGraph, M0: int, C0
) -> tuple[LocalExpansionCertificate, CheckReport]:
    """Certificate (C_LE, M_LE) = (C0, M0) from the walk trace.

    Requires g_vv - 1 <= (C0 - 1)/delta for all v (exact check); the returned
    report covers the path-vertex bound and the union bound on edges.
    """
    delta = g.require_regular()
    C0 = Fraction(C0)
    t = green_table(g, M0, exact=True)
    D = t.denom
    excess = [Fraction(int(t.numer[v, v]) - D, D) for v in range(g.n)]
    v = max(range(g.n), key=lambda x: excess[x])
    if excess[v] > (C0 - 1) / delta:
        raise PremiseError(
            f"return-visit premise fails at vertex {v}: g_vv - 1 = {excess[v]} > {(C0 - 1) / delta}"
        )
    src = WalkTraceSource(g, M0)
    cert = LocalExpansionCertificate(C0, Fraction(M0), src, {"max_return": excess[v]})
    pv = path_vert_check(g, M0, C0)
    ep = src.edge_probabilities()
    e = max(ep, key=lambda x: ep[x])
    union = inequality("walk-union-bound", ep[e], Fraction(M0, g.num_edges), 0, witness=e, edge=e)
    return cert, combine("walk-expansion", [pv, union])


def uniform_edge_source(g: BipartiteGraph) -> OrbitSource:
    """T is a single uniformly random edge."""

    def factory():
        w = Fraction(1, g.num_edges)
        return [(w, frozenset([e])) for e in g.edges]

    return OrbitSource(g, factory, "uniform edge")
