"""Reflection group actions on Z_L^d, chessboard seminorms and the
symmetry-breaking phase observable.

Vertices of Z_L^d are indexed as in :func:`hclab.graphs.torus_coords`.
Configurations are bitmasks; a group element acts on them by
``(sigma tau)_v = sigma_{tau v}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from .graphs import BipartiteGraph, TorusSpec, build_torus, torus_coords, torus_index
from .hardcore import as_fugacity, enumerate_configs, zeta
from .report import CheckReport, combine, equality, inequality

TABLE_SITES_CAP = 20
POSITIVITY_TOL = 1e-12


class ReflectionPositivityError(RuntimeError):
    """A disseminated integral came out clearly negative."""


@dataclass(frozen=True)
class ReflectionGroupSpec:
    ell: int
    L: int
    d: int

    def __post_init__(self) -> None:
        if self.ell < 1 or self.d < 1:
            raise ValueError("need ell >= 1 and d >= 1")
        if self.L % (2 * self.ell):
            raise ValueError(f"L={self.L} is not a multiple of 2*ell={2 * self.ell}")

    @property
    def torus(self) -> TorusSpec:
        return TorusSpec(self.L, self.d)

    @property
    def per_axis(self) -> int:
        return self.L // self.ell

    @property
    def order(self) -> int:
        return self.per_axis**self.d


@dataclass(frozen=True)
class GroupElement:
    """Per-axis ('rot', n): v -> v + 2 n ell, or ('ref', n): v -> 2 n ell - v."""

    spec: ReflectionGroupSpec
    axes: tuple[tuple[str, int], ...]

    def coord_map(self, x: Sequence[int]) -> tuple[int, ...]:
        L, ell = self.spec.L, self.spec.ell
        out = []
        for (kind, n), v in zip(self.axes, x):
            out.append((v + 2 * n * ell) % L if kind == "rot" else (2 * n * ell - v) % L)
        return tuple(out)

    def apply(self, v: int) -> int:
        return torus_index(self.coord_map(torus_coords(v, self.spec.L, self.spec.d)), self.spec.L)

    @cached_property
    def perm(self) -> np.ndarray:
        return np.array([self.apply(v) for v in range(self.spec.L**self.spec.d)], dtype=np.int64)

    def midpoint_image(self) -> tuple[Fraction, ...]:
        """Image of the centre of [0, ell]^d in (R/LZ)^d."""
        L, ell = self.spec.L, self.spec.ell
        h = Fraction(ell, 2)
        out = []
        for kind, n in self.axes:
            out.append((h + 2 * n * ell) % L if kind == "rot" else (2 * n * ell - h) % L)
        return tuple(out)

    def is_identity(self) -> bool:
        return all(k == "rot" and n == 0 for k, n in self.axes)


def group_elements(spec: ReflectionGroupSpec) -> list[GroupElement]:
    m = spec.L // (2 * spec.ell)
    axis = [("rot", n) for n in range(m)] + [("ref", n) for n in range(m)]
    return [GroupElement(spec, a) for a in itertools.product(axis, repeat=spec.d)]


def tau_s(spec: ReflectionGroupSpec, s: Sequence[int]) -> GroupElement:
    """The element taking [0, ell]^d to [0, ell]^d + ell s (even s_i: rotation, odd: reflection)."""
    if len(s) != spec.d:
        raise ValueError("s has the wrong dimension")
    m = spec.L // (2 * spec.ell)
    axes = []
    for si in s:
        si %= spec.per_axis
        axes.append(("rot", (si // 2) % m) if si % 2 == 0 else ("ref", ((si + 1) // 2) % m))
    return GroupElement(spec, tuple(axes))


def tau_s_unique(spec: ReflectionGroupSpec, s: Sequence[int]) -> bool:
    """Exhaustive check that exactly one element sends the domain to the shifted one."""
    ell, L = spec.ell, spec.L
    target = tuple((Fraction(ell, 2) + ell * si) % L for si in s)
    hits = [t for t in group_elements(spec) if t.midpoint_image() == target]
    return len(hits) == 1 and hits[0] == tau_s(spec, s)


def block_sites(spec: ReflectionGroupSpec) -> list[tuple[int, ...]]:
    """Coordinates of [0, ell]^d in row-major order."""
    return list(itertools.product(range(spec.ell + 1), repeat=spec.d))


def block_indices(spec: ReflectionGroupSpec) -> np.ndarray:
    return np.array([torus_index(tuple(c % spec.L for c in x), spec.L) for x in block_sites(spec)], dtype=np.int64)


# ---------------------------------------------------------------- weights


def weight(x: Sequence[int], ell: int) -> Fraction:
    """1/2 for each coordinate in {0, ell}; zero outside [0, ell]^d."""
    w = Fraction(1)
    for c in x:
        if c < 0 or c > ell:
            return Fraction(0)
        if c in (0, ell):
            w /= 2
    return w


def stabilizer_size(spec: ReflectionGroupSpec, x: Sequence[int]) -> int:
    v = torus_index(tuple(c % spec.L for c in x), spec.L)
    return sum(1 for t in group_elements(spec) if t.apply(v) == v)


def weighted_sum(sigma: int, A, spec: ReflectionGroupSpec) -> Fraction:
    """|sigma|^w_A = sum over v in A of w_v sigma_v (w lives on the block)."""
    A = set(A)
    total = Fraction(0)
    for x in block_sites(spec):
        v = torus_index(tuple(c % spec.L for c in x), spec.L)
        if v in A and sigma >> v & 1:
            total += weight(x, spec.ell)
    return total


def act(sigma: int, t: GroupElement) -> int:
    """sigma tau as a bitmask."""
    out = 0
    for v, tv in enumerate(t.perm):
        out |= ((sigma >> int(tv)) & 1) << v
    return out


def is_invariant(A, spec: ReflectionGroupSpec) -> bool:
    A = set(A)
    return all({int(t.perm[v]) for v in A} == A for t in group_elements(spec))


def check_sums_identity(sigma: int, A, spec: ReflectionGroupSpec) -> CheckReport:
    """sum_tau |sigma tau|^w_A = |sigma_A| for invariant A."""
    if not is_invariant(A, spec):
        raise ValueError("A is not invariant under the group action")
    lhs = sum((weighted_sum(act(sigma, t), A, spec) for t in group_elements(spec)), Fraction(0))
    rhs = Fraction(sum(1 for v in A if sigma >> v & 1))
    return equality("weighted-sums", lhs, rhs, 0, witness=sigma)


# ---------------------------------------------------------------- local observables


@dataclass(frozen=True)
class LocalObservable:
    """A function of the pattern on [0, ell]^d.

    ``table`` is indexed by the pattern bitmask whose bit j is the state of
    the j-th block site (row-major). ``func`` receives an array of pattern
    bitmasks and must return values of the same length.
    """

    spec: ReflectionGroupSpec
    table: np.ndarray | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "f"

    def __post_init__(self) -> None:
        k = (self.spec.ell + 1) ** self.spec.d
        if self.table is None and self.func is None:
            raise ValueError("need a table or a function")
        if self.table is not None and len(self.table) != 1 << k:
            raise ValueError(f"table must have 2^{k} entries")

    def on_patterns(self, pats: np.ndarray) -> np.ndarray:
        if self.table is not None:
            return self.table[pats.astype(np.int64)]
        return np.asarray(self.func(pats))

    def __call__(self, configs, t: GroupElement | None = None) -> np.ndarray:
        """(tau f)(sigma) = f(sigma tau) for an array of configurations."""
        return self.on_patterns(patterns(self.spec, configs, t))


def patterns(spec: ReflectionGroupSpec, configs, t: GroupElement | None = None) -> np.ndarray:
    """Block pattern of sigma tau for every configuration."""
    c = np.atleast_1d(np.asarray(configs, dtype=np.uint64))
    idx = block_indices(spec)
    if t is not None:
        idx = t.perm[idx]
    out = np.zeros(len(c), dtype=np.uint64)
    for j, v in enumerate(idx):
        out |= ((c >> np.uint64(v)) & np.uint64(1)) << np.uint64(j)
    return out


def table_observable(spec: ReflectionGroupSpec, fn: Callable[[int], float], name: str = "f") -> LocalObservable:
    k = (spec.ell + 1) ** spec.d
    if k > TABLE_SITES_CAP:
        raise ValueError("block too large for a lookup table")
    vals = [fn(p) for p in range(1 << k)]
    dtype = object if any(isinstance(v, Fraction) for v in vals) else np.float64
    if all(isinstance(v, (int, np.integer)) for v in vals):
        dtype = np.int64
    return LocalObservable(spec, np.array(vals, dtype=dtype), name=name)


def constant_observable(spec: ReflectionGroupSpec, c=1) -> LocalObservable:
    return LocalObservable(spec, func=lambda p: np.full(len(p), c), name=f"const{c}")


def site_indicator(spec: ReflectionGroupSpec, site: Sequence[int] | None = None) -> LocalObservable:
    """1{sigma_x = 1} for a block site x (default the origin)."""
    x = tuple(site) if site is not None else (0,) * spec.d
    j = block_sites(spec).index(x)
    return LocalObservable(spec, func=lambda p: ((p >> np.uint64(j)) & np.uint64(1)).astype(np.int64), name=f"occ{x}")


def random_observable(spec: ReflectionGroupSpec, rng: np.random.Generator, signed: bool = False) -> LocalObservable:
    k = (spec.ell + 1) ** spec.d
    if k > TABLE_SITES_CAP:
        raise ValueError("block too large for a lookup table")
    vals = rng.uniform(-1.0 if signed else 0.0, 1.0, size=1 << k)
    return LocalObservable(spec, vals, name="random")


@lru_cache(maxsize=16)
def _torus_configs(L: int, d: int) -> np.ndarray:
    return enumerate_configs(build_torus(TorusSpec(L, d)))


def torus_configs(spec: ReflectionGroupSpec) -> np.ndarray:
    return _torus_configs(spec.L, spec.d)


def disseminated_values(fs: Sequence[LocalObservable], elements: Sequence[GroupElement], configs) -> np.ndarray:
    """prod_tau (tau f_tau)(sigma) for each configuration."""
    out = None
    for f, t in zip(fs, elements):
        v = f(configs, t)
        out = v if out is None else out * v
    return out


def disseminated_integral(f: LocalObservable, lam, exact: bool | None = None):
    """zeta(prod_tau tau f) over all group elements, by full enumeration."""
    spec = f.spec
    els = group_elements(spec)
    cfg = torus_configs(spec)
    vals = disseminated_values([f] * len(els), els, cfg)
    return zeta(vals, cfg, as_fugacity(lam), exact)


def _root(inner, order: int, scale: float = 1.0) -> float:
    x = float(inner)
    if x < -POSITIVITY_TOL * max(1.0, scale):
        raise ReflectionPositivityError(f"disseminated integral is negative: {x}")
    if x <= 0:
        return 0.0
    return math.exp(math.log(x) / order)


def chessboard_seminorm(f: LocalObservable, lam) -> float:
    """(zeta(prod_tau tau f))^(1/|group|)."""
    spec = f.spec
    lam = as_fugacity(lam)
    els = group_elements(spec)
    cfg = torus_configs(spec)
    vals = disseminated_values([f] * len(els), els, cfg)
    inner = zeta(vals, cfg, lam)
    scale = zeta(np.abs(vals.astype(np.float64)), cfg, float(lam), exact=False)
    return _root(inner, spec.order, scale)


def check_chessboard_estimate(fs: Sequence[LocalObservable], lam, tol: float = 1e-10) -> CheckReport:
    """zeta(prod_tau tau f_tau) <= prod_tau ||f_tau||, with f_tau listed in group_elements order."""
    spec = fs[0].spec
    els = group_elements(spec)
    if len(fs) != len(els):
        raise ValueError(f"need {len(els)} observables")
    cfg = torus_configs(spec)
    lhs = float(zeta(disseminated_values(fs, els, cfg), cfg, as_fugacity(lam)))
    rhs = math.prod(chessboard_seminorm(f, lam) for f in fs)
    return inequality("chessboard-estimate", lhs, rhs, tol * max(1.0, abs(rhs)))


def check_seminorm_properties(
    spec: ReflectionGroupSpec, lam, rng: np.random.Generator, pairs: int = 20, tol: float = 1e-10
) -> CheckReport:
    """Reflection positivity, homogeneity, triangle inequality and monotonicity on random observables."""
    parts = []
    for i in range(pairs):
        f = random_observable(spec, rng, signed=True)
        g = random_observable(spec, rng, signed=True)
        a = float(rng.uniform(-3, 3))
        inner = float(disseminated_integral(f, lam, exact=False))
        scale = float(disseminated_integral(LocalObservable(spec, np.abs(f.table)), lam, exact=False))
        parts.append(inequality(f"positivity[{i}]", 0.0, inner, POSITIVITY_TOL * max(1.0, scale)))
        nf, ng = chessboard_seminorm(f, lam), chessboard_seminorm(g, lam)
        naf = chessboard_seminorm(LocalObservable(spec, a * f.table), lam)
        parts.append(equality(f"homogeneity[{i}]", naf, abs(a) * nf, tol * max(1.0, nf)))
        nsum = chessboard_seminorm(LocalObservable(spec, f.table + g.table), lam)
        parts.append(inequality(f"triangle[{i}]", nsum, nf + ng, tol * max(1.0, nf + ng)))
        lo = np.abs(f.table)
        hi = lo + np.abs(g.table)
        nlo = chessboard_seminorm(LocalObservable(spec, lo), lam)
        nhi = chessboard_seminorm(LocalObservable(spec, hi), lam)
        parts.append(inequality(f"monotonicity[{i}]", nlo, nhi, tol * max(1.0, nhi)))
    return combine("seminorm-properties", parts, ell=spec.ell, L=spec.L, d=spec.d)


# ---------------------------------------------------------------- torus comparison


def interface_matrix(f: LocalObservable, lam) -> np.ndarray:
    """B(a, b) for d = 1: sum over paths 0..ell with end states a, b of
    lam^(-(a+b)/2) f(sigma) lam^|sigma|."""
    spec = f.spec
    if spec.d != 1:
        raise ValueError("interface matrix implemented for d = 1")
    ell = spec.ell
    lam = float(lam)
    B = np.zeros((2, 2))
    for p in range(1 << (ell + 1)):
        if p & (p >> 1):
            continue
        a, b = p & 1, (p >> ell) & 1
        val = float(f.on_patterns(np.array([p], dtype=np.uint64))[0])
        B[a, b] += val * lam ** (bin(p).count("1") - (a + b) / 2)
    return B


def trace_route(f: LocalObservable, lam, L: int) -> float:
    """trace((B B^T)^(L / 2 ell)), equal to zeta(prod tau f) on Z_L."""
    B = interface_matrix(f, lam)
    k = L // (2 * f.spec.ell)
    return float(np.trace(np.linalg.matrix_power(B @ B.T, k)))


def with_side(f: LocalObservable, L: int) -> LocalObservable:
    spec = ReflectionGroupSpec(f.spec.ell, L, f.spec.d)
    return LocalObservable(spec, f.table, f.func, f.name)


def seminorm_torus_comparison(f: LocalObservable, lam, L2: int | None = None, tol: float = 1e-10) -> CheckReport:
    """||f||_{ell|L'} <= ||f||_{ell|L} for L' = L + 2 ell (or a given multiple side).

    On d = 1 the transfer-matrix representation is also compared against
    direct enumeration on both tori.
    """
    L = f.spec.L
    L2 = L2 or L + 2 * f.spec.ell
    big = with_side(f, L2)
    n_small = chessboard_seminorm(f, lam)
    n_big = chessboard_seminorm(big, lam)
    parts = [inequality("torus-comparison", n_big, n_small, tol * max(1.0, n_small), L=L, L2=L2)]
    if f.spec.d == 1:
        for side, obs in ((L, f), (L2, big)):
            direct = float(disseminated_integral(obs, lam, exact=False))
            tr = trace_route(f, lam, side)
            parts.append(equality(f"trace-route[L={side}]", tr, direct, tol * max(1.0, abs(direct))))
        A = interface_matrix(f, lam)
        ev = np.linalg.eigvalsh(A @ A.T)
        parts.append(inequality("interface-psd", 0.0, float(ev.min()), 1e-12))
    return combine("seminorm-torus-comparison", parts, lhs=n_big, rhs=n_small)


# ---------------------------------------------------------------- phase observable


@dataclass(frozen=True)
class PhaseObservable:
    """Tables of g, 1_{B_0}, 1_{B_H} and f over block patterns.

    Weighted counts are stored multiplied by 2^d so they are integers;
    alpha is compared exactly. Faces are ordered (axis, side) with the side
    0 face first.
    """

    spec: ReflectionGroupSpec
    lam: Fraction | float
    c_alpha: Fraction | float
    alpha: Fraction | float
    faces: tuple[tuple[int, int], ...]
    g: np.ndarray
    b0: np.ndarray
    bh: np.ndarray  # shape (faces, patterns)

    @property
    def bad(self) -> np.ndarray:
        return self.b0 | self.bh.any(axis=0)

    @property
    def f(self) -> np.ndarray:
        return np.where(self.bad, 0, self.g).astype(np.int64)

    def observable(self, which: str = "f") -> LocalObservable:
        if which == "f":
            tab = self.f
        elif which == "g":
            tab = self.g.astype(np.int64)
        elif which == "B":
            tab = self.bad.astype(np.int64)
        elif which == "B0":
            tab = self.b0.astype(np.int64)
        elif which.startswith("BH"):
            tab = self.bh[int(which[2:])].astype(np.int64)
        else:
            raise ValueError(f"unknown observable {which!r}")
        return LocalObservable(self.spec, tab, name=which)

    def face_eps(self, face: int, eps: int) -> LocalObservable:
        """Indicator of B_{H,eps} = B_H and {g = eps} minus B_0."""
        tab = self.bh[face] & (self.g == eps) & ~self.b0
        return LocalObservable(self.spec, tab.astype(np.int64), name=f"BH{face}eps{eps}")


def _lt(x: np.ndarray, a) -> np.ndarray:
    """x < a for integer arrays x and a rational or float a."""
    if isinstance(a, Fraction):
        return x * a.denominator < a.numerator
    return x < a


def phase_observable(spec: ReflectionGroupSpec, lam, c_alpha=Fraction(1, 100)) -> PhaseObservable:
    if spec.ell % 2 == 0:
        raise ValueError("the phase observable needs odd ell")
    k = (spec.ell + 1) ** spec.d
    if k > TABLE_SITES_CAP:
        raise ValueError("block too large for a lookup table")
    lam = as_fugacity(lam)
    c_alpha = as_fugacity(c_alpha)
    alpha = c_alpha * lam / (1 + lam) * spec.ell**spec.d
    sites = block_sites(spec)
    scale = 2**spec.d
    W = np.array([int(weight(x, spec.ell) * scale) for x in sites], dtype=np.int64)
    odd = np.array([sum(x) % 2 for x in sites], dtype=bool)
    pats = np.arange(1 << k, dtype=np.int64)
    bits = (pats[:, None] >> np.arange(k)[None, :]) & 1
    we = (bits * (W * ~odd)).sum(axis=1)
    wo = (bits * (W * odd)).sum(axis=1)
    a2 = alpha * scale
    b0 = ~_lt(np.minimum(we, wo), a2)
    faces = tuple((i, side) for i in range(spec.d) for side in (0, spec.ell))
    bh = []
    for i, side in faces:
        on = np.array([x[i] == side for x in sites])
        wh = (bits * (W * on)).sum(axis=1)
        bh.append(~_lt(2 * a2, wh))  # |sigma|^w_H <= 2 alpha
    g = np.sign(wo - we).astype(np.int64)
    return PhaseObservable(spec, lam, c_alpha, alpha, faces, g, b0, np.array(bh))


def neighbor_pairs(spec: ReflectionGroupSpec) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    m = spec.per_axis
    out = []
    for s in itertools.product(range(m), repeat=spec.d):
        for i in range(spec.d):
            t = list(s)
            t[i] = (t[i] + 1) % m
            t = tuple(t)
            if t != s and (t, s) not in out:
                out.append((s, t))
    return out


def check_separator(phase: PhaseObservable, configs=None, pairs=None) -> CheckReport:
    """tau_s f * tau_t f >= 0 for nearest neighbours s, t, over the given configurations."""
    spec = phase.spec
    if configs is None:
        configs = torus_configs(spec)
    configs = np.atleast_1d(np.asarray(configs, dtype=np.uint64))
    f = phase.observable("f")
    worst = None
    bad = 0
    for s, t in pairs or neighbor_pairs(spec):
        prod = f(configs, tau_s(spec, s)) * f(configs, tau_s(spec, t))
        neg = np.nonzero(prod < 0)[0]
        bad += len(neg)
        if len(neg) and worst is None:
            worst = {"sigma": int(configs[neg[0]]), "s": s, "t": t}
    return inequality("separator", bad, 0, 0, witness=worst, configs=len(configs))


def f_distribution(phase: PhaseObservable) -> dict[int, Fraction | float]:
    """Law of f under the hard-core measure on Z_L^d."""
    cfg = torus_configs(phase.spec)
    vals = phase.observable("f")(cfg)
    Z = zeta(np.ones(len(cfg), dtype=np.int64), cfg, phase.lam)
    return {k: zeta((vals == k).astype(np.int64), cfg, phase.lam) / Z for k in (-1, 0, 1)}


def check_f_expectation_zero(phase: PhaseObservable, tol: float = 1e-10) -> CheckReport:
    cfg = torus_configs(phase.spec)
    vals = phase.observable("f")(cfg)
    Z = zeta(np.ones(len(cfg), dtype=np.int64), cfg, phase.lam)
    mean = zeta(vals, cfg, phase.lam) / Z
    return equality("f-mean-zero", mean, 0, 0 if isinstance(mean, Fraction) else tol)


def contour_probability_chain(phase: PhaseObservable, A: Sequence[Sequence[int]], tol: float = 1e-10) -> CheckReport:
    """P(tau_s f = 0 for s in A) <= (||1_B|| exp(-(ell^d/2) log(1+lam)))^|A|.

    Links: the probability equals zeta(prod_{s in A} tau_s 1_B)/Z; the
    chessboard estimate bounds the numerator by ||1_B||^|A| ||1||^(N-|A|);
    ||1||^N = Z; and ||1|| >= (1+lam)^(ell^d/2).
    """
    spec = phase.spec
    cfg = torus_configs(spec)
    lam = phase.lam
    A = [tuple(s) for s in A]
    N = spec.order
    one = np.ones(len(cfg), dtype=np.int64)
    ind_B = phase.observable("B")
    hit = one.copy()
    for s in A:
        hit = hit * ind_B(cfg, tau_s(spec, s))
    Z = zeta(one, cfg, lam)
    num = zeta(hit, cfg, lam)
    prob = num / Z
    nB = chessboard_seminorm(ind_B, lam)
    n1 = chessboard_seminorm(constant_observable(spec, 1), lam)
    lt = math.log1p(float(lam))
    rhs = (nB * math.exp(-(spec.ell**spec.d) / 2 * lt)) ** len(A)
    parts = [
        inequality("chessboard-link", float(num), nB ** len(A) * n1 ** (N - len(A)), tol * max(1.0, float(Z))),
        equality("norm-of-one", n1**N, float(Z), tol * float(Z)),
        inequality("norm-of-one-lower", (spec.ell**spec.d) / 2 * lt, math.log(n1), tol),
        inequality("contour-bound", float(prob), rhs, tol),
    ]
    return combine("contour-chain", parts, A=A, probability=prob, bound=rhs, norm_B=nB)
