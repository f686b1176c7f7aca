"""Hard-core configurations: enumeration, exact partition functions, transfer
matrices on tori, exact Gibbs tables and Markov chain samplers.

Configurations are bitmasks: bit v is set when vertex v is occupied. Arrays of
configurations use ``numpy.uint64``, so enumeration is limited to 64 vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .entropy import FiniteDistribution
from .graphs import BipartiteGraph, TorusSpec, build_torus, torus_coords
from .report import CheckReport, inequality

ENUM_CAP = 40
EXACT_CAP = 24
SLICE_CAP = 20


def popcount(x) -> np.ndarray:
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


def as_fugacity(x) -> Fraction | float:
    """Parse a fugacity; strings like '1/2' and ints become exact fractions."""
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class FugacityParams:
    lam: float | Fraction

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError("fugacity must be positive")

    @property
    def logplam(self) -> float:
        """log(1 + lam), the free energy of a single free site."""
        return math.log1p(float(self.lam))


def is_independent(g: BipartiteGraph, sigma: int) -> bool:
    sigma = int(sigma)
    if sigma >> g.n:
        raise ValueError("bitset longer than the vertex set")
    for v in range(g.n):
        if sigma >> v & 1 and sigma & g.nbr_masks[v]:
            return False
    return True


def independent_mask(g: BipartiteGraph, configs: np.ndarray) -> np.ndarray:
    """Vectorised independence test over an array of bitmasks."""
    c = np.asarray(configs, dtype=np.uint64)
    ok = np.ones(len(c), dtype=bool)
    for v in range(g.n):
        occ = (c >> np.uint64(v)) & np.uint64(1)
        ok &= ~((occ == 1) & ((c & np.uint64(g.nbr_masks[v])) != 0))
    return ok


def enumerate_configs(g: BipartiteGraph, cap: int = ENUM_CAP) -> np.ndarray:
    """All independent sets as a sorted uint64 array (ascending bitmask value).

    Vertices are added one at a time; a partial configuration on the first k
    vertices is extended by vertex k only when none of its earlier
    neighbours is occupied, so the working set never exceeds the final count.
    """
    if g.n > cap:
        raise ValueError(f"{g.n} vertices exceeds the enumeration cap {cap}")
    if g.n > 64:
        raise ValueError("bitmask enumeration supports at most 64 vertices")
    states = np.zeros(1, dtype=np.uint64)
    for v in range(g.n):
        earlier = np.uint64(g.nbr_masks[v] & ((1 << v) - 1))
        free = states[(states & earlier) == 0]
        states = np.concatenate([states, free | np.uint64(1 << v)])
    states.sort()
    return states


def iter_configs(g: BipartiteGraph, cap: int = ENUM_CAP) -> Iterator[int]:
    """Depth-first stream of independent sets in ascending bitmask order."""
    if g.n > cap:
        raise ValueError(f"{g.n} vertices exceeds the enumeration cap {cap}")
    n = g.n
    masks = g.nbr_masks

    # Ascending integer order = decide the highest vertex first, 0 before 1.
    def rec(v: int, sigma: int) -> Iterator[int]:
        if v < 0:
            yield sigma
            return
        yield from rec(v - 1, sigma)
        if not sigma & masks[v]:
            yield from rec(v - 1, sigma | (1 << v))

    yield from rec(n - 1, 0)


def independence_polynomial(g: BipartiteGraph, cap: int = ENUM_CAP) -> list[int]:
    """Coefficient k is the number of independent sets of size k."""
    return [int(c) for c in np.bincount(popcount(enumerate_configs(g, cap)))]


@dataclass(frozen=True)
class PartitionResult:
    log_z: float
    method: str
    exact: Fraction | None = None

    def to_dict(self) -> dict:
        out = {"logZ": self.log_z, "method": self.method}
        if self.exact is not None:
            out["exact"] = f"{self.exact.numerator}/{self.exact.denominator}"
        return out


def _log_poly(coeffs: Sequence[int], lam: float) -> float:
    terms = [math.log(c) + k * math.log(lam) for k, c in enumerate(coeffs) if c]
    top = max(terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def partition_bruteforce(g: BipartiteGraph, lam, cap: int = ENUM_CAP) -> PartitionResult:
    """Z = sum of lam^|sigma| over independent sets, via the independence polynomial.

    The result is exact when lam is an int or Fraction and |V| <= 24.
    """
    coeffs = independence_polynomial(g, cap)
    exact = None
    if isinstance(lam, (int, Fraction)) and g.n <= EXACT_CAP:
        lam_q = Fraction(lam)
        exact = sum(c * lam_q**k for k, c in enumerate(coeffs))
    log_z = math.log(exact) if exact is not None else _log_poly(coeffs, float(lam))
    return PartitionResult(log_z, "brute", exact)


@dataclass(frozen=True)
class TransferMatrix:
    """Symmetric slice-to-slice matrix of a torus along one axis."""

    spec: TorusSpec
    axis: int
    slice_vertices: tuple[int, ...]
    states: np.ndarray
    matrix: np.ndarray


def torus_slice(spec: TorusSpec, axis: int, index: int = 0) -> tuple[int, ...]:
    """Vertices with coordinate ``axis`` equal to ``index``, sorted by the other coordinates."""
    out = [v for v in range(spec.n) if torus_coords(v, spec.L, spec.d)[axis] == index]
    return tuple(out)


def transfer_matrix(spec: TorusSpec, lam, axis: int = 0, cap: int = SLICE_CAP) -> TransferMatrix:
    """M[s, t] = lam^((|s|+|t|)/2) when slice states s and t are compatible.

    Slice positions in consecutive slices are matched by the remaining
    coordinates, so compatibility is simply s & t == 0.
    """
    if not 0 <= axis < spec.d:
        raise ValueError("axis out of range")
    width = spec.L ** (spec.d - 1)
    if width > cap:
        raise ValueError(f"slice of {width} vertices exceeds the cap {cap}")
    g = build_torus(spec)
    verts = torus_slice(spec, axis, 0)
    local = {v: i for i, v in enumerate(verts)}
    edges = [(local[u], local[v]) for u, v in g.edges if u in local and v in local]
    sg = BipartiteGraph.from_edges(len(verts), edges)
    states = enumerate_configs(sg, cap=max(cap, len(verts)))
    sizes = popcount(states).astype(np.float64)
    compat = (states[:, None] & states[None, :]) == 0
    half = np.power(float(lam), sizes / 2.0)
    M = compat * np.outer(half, half)
    return TransferMatrix(spec, axis, verts, states, M)


def partition_transfer_torus(spec: TorusSpec, lam, axis: int = 0, cap: int = SLICE_CAP) -> PartitionResult:
    """Z = trace(M^L) from the eigenvalues of the symmetric transfer matrix."""
    tm = transfer_matrix(spec, lam, axis, cap)
    ev = np.linalg.eigvalsh(tm.matrix)
    top = np.abs(ev).max()
    s = math.fsum((ev / top) ** spec.L)
    return PartitionResult(math.log(s) + spec.L * math.log(top), "transfer")


def exact_distribution(g: BipartiteGraph, lam, cap: int = ENUM_CAP) -> FiniteDistribution:
    """Gibbs table mu(sigma) = lam^|sigma| / Z over all independent sets."""
    configs = enumerate_configs(g, cap)
    logw = popcount(configs) * math.log(float(lam))
    logw -= logw.max()
    w = np.exp(logw)
    return FiniteDistribution(configs, w / math.fsum(w))


def exact_probabilities(g: BipartiteGraph, lam: Fraction | int, cap: int = EXACT_CAP) -> dict[int, Fraction]:
    """Rational Gibbs masses for tiny graphs."""
    lam = Fraction(lam)
    configs = [int(c) for c in enumerate_configs(g, cap)]
    w = [lam ** int(c).bit_count() for c in configs]
    z = sum(w)
    return {c: wc / z for c, wc in zip(configs, w)}


def expectation(
    g: BipartiteGraph, lam, observable: Callable[[np.ndarray], np.ndarray], cap: int = ENUM_CAP
) -> float:
    """Gibbs expectation of a vectorised observable on bitmask arrays."""
    return exact_distribution(g, lam, cap).expect(observable)


def trivial_lower_bound_check(g: BipartiteGraph, lam) -> CheckReport:
    """Z >= (1+lam)^(|V|/2): occupy any subset of one class.

    For an unbalanced bipartition the larger class is used, which is the
    bound the same argument gives.
    """
    half = max(len(g.even), len(g.odd))
    res = partition_bruteforce(g, lam)
    balanced = len(g.even) == len(g.odd)
    if res.exact is not None:
        lhs = (1 + Fraction(lam)) ** half
        return inequality(
            "trivial-lower-bound", lhs, res.exact, 0, balanced=balanced, log_z=res.log_z
        )
    lhs = half * math.log1p(float(lam))
    return inequality("trivial-lower-bound", lhs, res.log_z, 1e-10, balanced=balanced, log_scale=True)


# ---------------------------------------------------------------- seeding


def split_seed(master: int, count: int) -> list[np.random.Generator]:
    """Independent generators for ``count`` chains derived from one master seed.

    Chain i uses ``SeedSequence(master).spawn(count)[i]``, so results do not
    depend on how chains are scheduled across workers.
    """
    return [np.random.default_rng(s) for s in np.random.SeedSequence(master).spawn(count)]


# ---------------------------------------------------------------- Glauber


def glauber_transition(g: BipartiteGraph, lam, sigma: int, tau: int) -> Fraction:
    """Exact one-step heat-bath probability sigma -> tau for tau != sigma."""
    lam = Fraction(lam)
    diff = sigma ^ tau
    if diff == 0 or diff & (diff - 1):
        return Fraction(0)
    v = diff.bit_length() - 1
    blocked = bool(sigma & g.nbr_masks[v])
    if tau >> v & 1:
        p = Fraction(0) if blocked else lam / (1 + lam)
    else:
        p = Fraction(1) if blocked else 1 / (1 + lam)
    return p / g.n


def glauber_chain(
    g: BipartiteGraph,
    lam: float,
    steps: int,
    seed: int,
    sigma0: int = 0,
    record_every: int = 0,
) -> tuple[int, np.ndarray]:
    """Heat-bath dynamics; returns the final state and the recorded states.

    Each step picks a uniform vertex v; if a neighbour is occupied v is
    emptied, otherwise v is occupied with probability lam/(1+lam). With
    ``record_every = k > 0`` the state after every k-th step is stored.
    """
    if not is_independent(g, sigma0):
        raise ValueError("initial configuration is not independent")
    rng = np.random.default_rng(seed)
    p = float(lam) / (1.0 + float(lam))
    masks = g.nbr_masks
    n = g.n
    sigma = int(sigma0)
    rec: list[int] = []
    chunk = 1 << 16
    done = 0
    while done < steps:
        k = min(chunk, steps - done)
        vs = rng.integers(0, n, size=k).tolist()
        us = (rng.random(k) < p).tolist()
        for i in range(k):
            v = vs[i]
            bit = 1 << v
            if sigma & masks[v] or not us[i]:
                sigma &= ~bit
            else:
                sigma |= bit
            if record_every and (done + i + 1) % record_every == 0:
                rec.append(sigma)
        done += k
    return sigma, np.array(rec, dtype=np.uint64)


def glauber_run(g: BipartiteGraph, lam: float, steps: int, seed: int, sigma0: int = 0) -> int:
    """Final configuration after ``steps`` heat-bath updates."""
    return glauber_chain(g, lam, steps, seed, sigma0)[0]


def glauber_batch(
    g: BipartiteGraph, lam: float, chains: int, steps: int, seed: int, record_every: int = 0
) -> np.ndarray:
    """Many independent heat-bath chains advanced together in numpy.

    Returns the final states, or all recorded snapshots stacked
    (snapshot-major) when ``record_every > 0``.
    """
    if g.n > 64:
        raise ValueError("at most 64 vertices")
    rng = np.random.default_rng(seed)
    p = float(lam) / (1.0 + float(lam))
    nbr = np.array(g.nbr_masks, dtype=np.uint64)
    state = np.zeros(chains, dtype=np.uint64)
    one = np.uint64(1)
    snaps = []
    for t in range(steps):
        v = rng.integers(0, g.n, size=chains).astype(np.uint64)
        accept = rng.random(chains) < p
        bit = one << v
        blocked = (state & nbr[v]) != 0
        occ = accept & ~blocked
        state = np.where(occ, state | bit, state & ~bit)
        if record_every and (t + 1) % record_every == 0:
            snaps.append(state.copy())
    return np.concatenate(snaps) if record_every else state


def detailed_balance_check(g: BipartiteGraph, lam) -> CheckReport:
    """mu(sigma) P(sigma, tau) = mu(tau) P(tau, sigma) for all pairs, in exact arithmetic
    (unnormalised weights lam^|sigma| suffice)."""
    lam = Fraction(lam)
    configs = [int(c) for c in enumerate_configs(g, EXACT_CAP)]
    bad = []
    pairs = 0
    for s in configs:
        for v in range(g.n):
            t = s ^ (1 << v)
            if t < s or not is_independent(g, t):
                continue
            pairs += 1
            lhs = lam ** s.bit_count() * glauber_transition(g, lam, s, t)
            rhs = lam ** t.bit_count() * glauber_transition(g, lam, t, s)
            if lhs != rhs:
                bad.append((s, t))
    return inequality("detailed-balance", len(bad), 0, 0, witness=bad[:5] or None, pairs=pairs)


def glauber_marginals_check(
    g: BipartiteGraph, lam, steps: int, seed: int, batches: int = 50, z: float = 3.0
) -> CheckReport:
    """Per-vertex occupation frequencies of one heat-bath run against the exact
    marginals, within z batch-means standard errors."""
    _, rec = glauber_chain(g, lam, steps, seed, record_every=1)
    bits = ((rec[:, None] >> np.arange(g.n, dtype=np.uint64)[None, :]) & np.uint64(1)).astype(np.float64)
    emp = bits.mean(axis=0)
    usable = len(bits) - len(bits) % batches
    bm = bits[:usable].reshape(batches, -1, g.n).mean(axis=1)
    se = bm.std(axis=0, ddof=1) / math.sqrt(batches)
    mu = exact_distribution(g, lam)
    exact = np.array([mu.prob(lambda c, v=v: (c >> np.uint64(v)) & np.uint64(1) == 1) for v in range(g.n)])
    dev = np.abs(emp - exact) / np.maximum(se, 1e-12)
    worst = int(np.argmax(dev))
    return inequality(
        "glauber-marginals",
        float(dev[worst]),
        z,
        0,
        witness=worst,
        empirical=emp,
        exact=exact,
        stderr=se,
        steps=steps,
        seed=seed,
    )


# ---------------------------------------------------------------- fixed size


def _legal_sites(g: BipartiteGraph, sigma: int) -> list[int]:
    return [y for y in range(g.n) if not (sigma >> y & 1) and not (sigma & g.nbr_masks[y])]


def _initial_fixed_size(g: BipartiteGraph, N: int) -> int:
    if g.parity is not None:
        cls = max(g.even, g.odd, key=len)
        if N <= len(cls):
            return sum(1 << v for v in cls[:N])
    if g.n <= ENUM_CAP:
        c = enumerate_configs(g)
        hit = c[popcount(c) == N]
        if len(hit):
            return int(hit[0])
    raise ValueError(f"no independent set of size {N}")


def fixed_size_configs(g: BipartiteGraph, N: int) -> np.ndarray:
    c = enumerate_configs(g)
    return c[popcount(c) == N]


def relocation_irreducible(g: BipartiteGraph, N: int) -> bool:
    """Whether relocation moves alone connect all independent sets of size N."""
    states = [int(c) for c in fixed_size_configs(g, N)]
    if not states:
        raise ValueError(f"no independent set of size {N}")
    seen = {states[0]}
    stack = [states[0]]
    while stack:
        s = stack.pop()
        x = s
        while x:
            b = x & -x
            x ^= b
            base = s ^ b
            for y in _legal_sites(g, base):
                t = base | (1 << y)
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
    return len(seen) == len(states)


def fixed_size_chain(
    g: BipartiteGraph,
    N: int,
    steps: int,
    seed: int,
    record_every: int = 0,
    p_local: float = 0.9,
) -> tuple[int, np.ndarray]:
    """Metropolis chain targeting the uniform law on independent sets of size N.

    With probability ``p_local`` a uniformly chosen occupied vertex is moved to
    a uniformly chosen legal vacant site (its own site included). Otherwise a
    uniformly random N-subset is proposed and accepted when independent; this
    global move keeps the chain irreducible where relocations freeze, e.g.
    at maximum packing. Both proposals are symmetric.
    """
    if N < 0:
        raise ValueError("N must be non-negative")
    sigma = 0 if N == 0 else _initial_fixed_size(g, N)
    rng = np.random.default_rng(seed)
    rec: list[int] = []
    for t in range(steps):
        if N == 0:
            pass
        elif rng.random() < p_local:
            occ = [v for v in range(g.n) if sigma >> v & 1]
            x = occ[int(rng.integers(0, len(occ)))]
            base = sigma & ~(1 << x)
            legal = _legal_sites(g, base)
            y = legal[int(rng.integers(0, len(legal)))]
            prop = base | (1 << y)
            back = len(_legal_sites(g, prop & ~(1 << y)))
            if rng.random() < min(1.0, len(legal) / back):
                sigma = prop
        else:
            pick = rng.choice(g.n, size=N, replace=False)
            prop = sum(1 << int(v) for v in pick)
            if is_independent(g, prop):
                sigma = prop
        if record_every and (t + 1) % record_every == 0:
            rec.append(sigma)
    return sigma, np.array(rec, dtype=np.uint64)


def sample_fixed_size(g: BipartiteGraph, N: int, steps: int, seed: int) -> int:
    return fixed_size_chain(g, N, steps, seed)[0]


# ---------------------------------------------------------------- weighted sums


def _zeta_of_values(values: np.ndarray, sizes: np.ndarray, lam, exact: bool):
    """sum over configurations of value * lam^|sigma|, grouped by size."""
    if exact:
        coeffs: dict[int, int] = {}
        for k in np.unique(sizes):
            coeffs[int(k)] = int(values[sizes == k].sum())
        lam = Fraction(lam)
        return sum((Fraction(c) * lam**k for k, c in coeffs.items()), Fraction(0))
    vals = values.astype(np.float64)
    return float(np.bincount(sizes, weights=vals) @ (float(lam) ** np.arange(sizes.max() + 1)))


def zeta(values: np.ndarray, configs: np.ndarray, lam, exact: bool | None = None):
    """zeta(F) for values F(sigma) given per configuration."""
    sizes = popcount(configs).astype(np.int64)
    if exact is None:
        exact = isinstance(lam, (int, Fraction)) and np.issubdtype(np.asarray(values).dtype, np.integer)
    return _zeta_of_values(np.asarray(values), sizes, lam, exact)
