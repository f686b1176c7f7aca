"""Coarse-grained field, roughness, occupation statistics and the bad and
balanced events, all vectorised over arrays of configuration bitmasks."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graphs import BipartiteGraph, TorusSpec
from .hardcore import popcount
from .report import CheckReport, combine, inequality

_U1 = np.uint64(1)


def _arr(configs) -> np.ndarray:
    return np.atleast_1d(np.asarray(configs, dtype=np.uint64))


def phi_even_masks(g: BipartiteGraph, configs) -> np.ndarray:
    """Bitmask of even vertices all of whose neighbours are vacant."""
    c = _arr(configs)
    out = np.zeros(len(c), dtype=np.uint64)
    for v in g.even:
        free = (c & np.uint64(g.nbr_masks[v])) == 0
        out |= free.astype(np.uint64) << np.uint64(v)
    return out


def odd_counts(g: BipartiteGraph, phi_even: np.ndarray) -> np.ndarray:
    """Number of phi = 1 neighbours of each odd vertex; shape (configs, |V_O|)."""
    return np.stack([popcount(phi_even & np.uint64(g.nbr_masks[u])) for u in g.odd], axis=1)


def phi_odd_masks(g: BipartiteGraph, counts: np.ndarray) -> np.ndarray:
    """Majority of the neighbouring even values, ties resolved to 1."""
    delta = g.require_regular()
    out = np.zeros(len(counts), dtype=np.uint64)
    for j, u in enumerate(g.odd):
        maj = 2 * counts[:, j] >= delta
        out |= maj.astype(np.uint64) << np.uint64(u)
    return out


@dataclass(frozen=True)
class CoarseField:
    """phi on even vertices, its majority extension and neighbourhood averages."""

    graph: BipartiteGraph
    phi_even: int
    phi_odd: int
    counts: tuple[int, ...]

    def phi(self, v: int) -> int:
        return ((self.phi_even | self.phi_odd) >> v) & 1

    def phi_hat(self, u: int) -> Fraction:
        j = self.graph.odd.index(u)
        return Fraction(self.counts[j], self.graph.degree)

    @property
    def mask(self) -> int:
        return self.phi_even | self.phi_odd


def coarse_field(g: BipartiteGraph, sigma: int) -> CoarseField:
    g.require_regular()
    pe = phi_even_masks(g, [sigma])
    cnt = odd_counts(g, pe)
    po = phi_odd_masks(g, cnt)
    return CoarseField(g, int(pe[0]), int(po[0]), tuple(int(x) for x in cnt[0]))


def edge_disagreements(g: BipartiteGraph, phi_full: np.ndarray) -> np.ndarray:
    """Number of edges uv with phi_u != phi_v, per configuration."""
    f = _arr(phi_full)
    out = np.zeros(len(f), dtype=np.int64)
    for u, v in g.edges:
        out += (((f >> np.uint64(u)) ^ (f >> np.uint64(v))) & _U1).astype(np.int64)
    return out


def min_sums(g: BipartiteGraph, counts: np.ndarray) -> np.ndarray:
    """Sum over odd u of min(c_u, delta - c_u), per configuration."""
    delta = g.require_regular()
    return np.minimum(counts, delta - counts).sum(axis=1)


@dataclass(frozen=True)
class RoughnessArrays:
    """Roughness of many configurations as exact integers over a common denominator.

    Phi = disagreements / |E| = 2 * min_sum / (|V| delta); both numerators are
    kept so the agreement of the two formulas is checkable exactly.
    """

    phi_even: np.ndarray
    phi_odd: np.ndarray
    counts: np.ndarray
    disagreements: np.ndarray
    min_sum: np.ndarray
    num_edges: int

    @property
    def values(self) -> np.ndarray:
        return self.disagreements / self.num_edges


def roughness_arrays(g: BipartiteGraph, configs) -> RoughnessArrays:
    g.require_regular()
    pe = phi_even_masks(g, configs)
    cnt = odd_counts(g, pe)
    po = phi_odd_masks(g, cnt)
    return RoughnessArrays(pe, po, cnt, edge_disagreements(g, pe | po), min_sums(g, cnt), g.num_edges)


def roughness(g: BipartiteGraph, sigma: int) -> Fraction:
    """Phi as an exact fraction; both defining formulas are evaluated and compared."""
    r = roughness_arrays(g, [sigma])
    by_edges = Fraction(int(r.disagreements[0]), g.num_edges)
    by_odd = Fraction(2, g.n) * Fraction(int(r.min_sum[0]), g.degree)
    if by_edges != by_odd:
        raise RuntimeError(f"roughness formulas disagree: {by_edges} vs {by_odd}")
    return by_edges


@dataclass(frozen=True)
class OccupationStats:
    even: int
    odd: int

    @property
    def total(self) -> int:
        return self.even + self.odd

    @property
    def M(self) -> int:
        return min(self.even, self.odd)


def occupation(g: BipartiteGraph, sigma: int) -> OccupationStats:
    return OccupationStats(int(sigma & g.even_mask).bit_count(), int(sigma & g.odd_mask).bit_count())


def class_counts(g: BipartiteGraph, configs) -> tuple[np.ndarray, np.ndarray]:
    c = _arr(configs)
    return popcount(c & np.uint64(g.even_mask)), popcount(c & np.uint64(g.odd_mask))


def min_occupation(g: BipartiteGraph, configs) -> np.ndarray:
    e, o = class_counts(g, configs)
    return np.minimum(e, o)


def check_M_le_Phi(g: BipartiteGraph, configs, h) -> CheckReport:
    """M <= (delta / 2h) Phi |V| for every given configuration, exactly.

    With Phi = 2 S / (|V| delta), S the odd-vertex min-sum, the right side is S/h.
    """
    h = Fraction(h)
    if h <= 0:
        raise ValueError("Cheeger bound must be positive")
    c = _arr(configs)
    r = roughness_arrays(g, c)
    M = min_occupation(g, c)
    # M <= S / h  <=>  M * h.num <= S * h.den
    slack = r.min_sum * h.denominator - M * h.numerator
    i = int(np.argmin(slack))
    lhs = int(M[i])
    rhs = Fraction(int(r.min_sum[i]), 1) / h
    return inequality(
        "m-le-phi", Fraction(lhs), rhs, 0, witness=int(c[i]), configs=len(c), violations=int((slack < 0).sum())
    )


def check_M_le_Phi_internals(g: BipartiteGraph, configs) -> CheckReport:
    """Steps used in the proof: sigma_v = 1 => phi_v = 1 on V_E,
    |sigma_O| <= sum over V_E of (1 - phi_v), and M <= M'."""
    c = _arr(configs)
    pe = phi_even_masks(g, c)
    occ_even = c & np.uint64(g.even_mask)
    implication = int(((occ_even & ~pe) != 0).sum())
    e, o = class_counts(g, c)
    phi_ones = popcount(pe)
    phi_zeros = len(g.even) - phi_ones
    dbl = int((o > phi_zeros).sum())
    Mp = np.minimum(phi_ones, phi_zeros)
    mm = int((np.minimum(e, o) > Mp).sum())
    parts = [
        inequality("sigma-implies-phi", implication, 0, 0),
        inequality("odd-count-le-phi-zeros", dbl, 0, 0),
        inequality("M-le-Mprime", mm, 0, 0),
    ]
    return combine("m-le-phi-internals", parts, configs=len(c))


def bad_event_torus(configs, spec: TorusSpec, lam: float, C0: float, g: BipartiteGraph | None = None) -> np.ndarray:
    """Indicator of {M > L^(d+1)/d^C0} or {| |sigma| - (L^d/2) lam/(1+lam) | > L^(d+1)/d^C0}."""
    if spec.L % 2:
        raise ValueError("needs even L")
    if g is None:
        from .graphs import build_torus

        g = build_torus(spec)
    thr = spec.L ** (spec.d + 1) / spec.d**C0
    e, o = class_counts(g, configs)
    mean = spec.n / 2 * float(lam) / (1 + float(lam))
    return (np.minimum(e, o) > thr) | (np.abs(e + o - mean) > thr)


def balanced_event(configs, g: BipartiteGraph, lam: float) -> np.ndarray:
    """Indicator of M > (1/10) (lam/(1+lam)) |V|."""
    thr = 0.1 * float(lam) / (1 + float(lam)) * g.n
    return min_occupation(g, configs) > thr
