"""Entropy, conditional entropy, KL divergence, Shearer-type inequalities and
the free-energy functional on explicit finite distributions (nats)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .report import CheckReport, combine, equality, inequality

TOL = 1e-10

View = Union[Callable[[np.ndarray], np.ndarray], int, Sequence[int], None]
Event = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, None]


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Explicit probability table.

    ``outcomes`` has one row per outcome: a 1-d array (e.g. configuration
    bitmasks) or a 2-d array whose columns are coordinates.
    """

    outcomes: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or len(p) != len(self.outcomes):
            raise ValueError("one probability per outcome required")
        if (p < 0).any():
            raise ValueError("negative probability")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "outcomes", np.asarray(self.outcomes))

    @classmethod
    def from_weights(cls, outcomes, weights) -> "FiniteDistribution":
        w = np.asarray(weights, dtype=np.float64)
        tot = w.sum()
        if not tot > 0:
            raise ValueError("weights must have positive total")
        return cls(np.asarray(outcomes), w / tot)

    def __len__(self) -> int:
        return len(self.probs)

    def prob(self, event: Event) -> float:
        return float(self.probs[_event_mask(self, event)].sum())

    def expect(self, f: Callable[[np.ndarray], np.ndarray], event: Event = None) -> float:
        mask = _event_mask(self, event)
        pe = self.probs[mask].sum()
        if pe <= 0:
            raise ValueError("conditioning event has probability zero")
        vals = np.asarray(f(self.outcomes[mask]), dtype=np.float64)
        return float((self.probs[mask] * vals).sum() / pe)

    def condition(self, event: Event) -> "FiniteDistribution":
        mask = _event_mask(self, event)
        pe = self.probs[mask].sum()
        if pe <= 0:
            raise ValueError("conditioning event has probability zero")
        return FiniteDistribution(self.outcomes[mask], self.probs[mask] / pe)

    def product(self, other: "FiniteDistribution") -> "FiniteDistribution":
        """Independent joint; outcome rows are concatenated column-wise."""
        a = _as_columns(self.outcomes)
        b = _as_columns(other.outcomes)
        ia = np.repeat(np.arange(len(a)), len(b))
        ib = np.tile(np.arange(len(b)), len(a))
        return FiniteDistribution(
            np.concatenate([a[ia], b[ib]], axis=1), self.probs[ia] * other.probs[ib]
        )


def _as_columns(x: np.ndarray) -> np.ndarray:
    return x.reshape(len(x), -1)


def _event_mask(dist: FiniteDistribution, event: Event) -> np.ndarray:
    if event is None:
        return np.ones(len(dist), dtype=bool)
    if callable(event):
        return np.asarray(event(dist.outcomes), dtype=bool)
    return np.asarray(event, dtype=bool)


def _view(dist_outcomes: np.ndarray, X: View) -> np.ndarray:
    if X is None:
        return np.zeros(len(dist_outcomes), dtype=np.int64)
    if callable(X):
        return np.asarray(X(dist_outcomes))
    cols = _as_columns(dist_outcomes)
    return cols[:, X] if isinstance(X, (int, np.integer)) else cols[:, list(X)]


def labels(keys: np.ndarray) -> np.ndarray:
    """Dense integer labels for the distinct rows of ``keys``."""
    keys = np.asarray(keys)
    if keys.ndim == 1:
        _, inv = np.unique(keys, return_inverse=True)
    else:
        _, inv = np.unique(keys.reshape(len(keys), -1), axis=0, return_inverse=True)
    return inv.reshape(-1)


def _joint_labels(*label_arrays: np.ndarray) -> np.ndarray:
    out = np.zeros(len(label_arrays[0]), dtype=np.int64)
    for lab in label_arrays:
        out = labels(out * (int(lab.max()) + 1 if len(lab) else 1) + lab)
    return out


def _entropy_of_labels(lab: np.ndarray, p: np.ndarray) -> float:
    mass = np.bincount(lab, weights=p)
    mass = mass[mass > 0]
    return float(-(mass * np.log(mass)).sum())


def shannon_entropy(dist: FiniteDistribution | np.ndarray) -> float:
    """Sum of p log(1/p) with 0 log(1/0) = 0; accepts a distribution or a probability vector."""
    p = dist.probs if isinstance(dist, FiniteDistribution) else np.asarray(dist, dtype=np.float64)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def conditional_entropy(
    dist: FiniteDistribution, X: View, Y: View = None, E: Event = None
) -> float:
    """S(X | Y; E): entropy of X given Y under the distribution conditioned on E."""
    mask = _event_mask(dist, E)
    pe = dist.probs[mask].sum()
    if pe <= 0:
        raise ValueError("conditioning event has probability zero")
    out = dist.outcomes[mask]
    p = dist.probs[mask] / pe
    lx = labels(_view(out, X))
    ly = labels(_view(out, Y))
    return _entropy_of_labels(_joint_labels(lx, ly), p) - _entropy_of_labels(ly, p)


def entropy(dist: FiniteDistribution, X: View = None, E: Event = None) -> float:
    """S(X; E); with X omitted the whole outcome is the variable."""
    if X is None:
        X = lambda o: o  # noqa: E731
    return conditional_entropy(dist, X, None, E)


def binary_entropy(x: float) -> float:
    if not 0 <= x <= 1:
        raise ValueError("x must lie in [0, 1]")
    return float(sum(-t * math.log(t) for t in (x, 1 - x) if t > 0))


def binary_entropy_bound(x: float) -> float:
    """x log(e/x), the upper bound for the binary entropy (0 at x = 0)."""
    return 0.0 if x == 0 else x * (1 - math.log(x))


def binary_entropy_bound_check(grid: Iterable[float] | None = None) -> CheckReport:
    if grid is None:
        grid = [i / 100 for i in range(1, 100)]
    parts = [
        inequality(f"binary-entropy@{x:g}", binary_entropy(x), binary_entropy_bound(x), TOL)
        for x in [0.0, *grid]
    ]
    return combine("binary-entropy", parts)


def _aligned(mu, nu) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(mu, FiniteDistribution):
        return np.asarray(mu, dtype=np.float64), np.asarray(nu, dtype=np.float64)
    a, b = _as_columns(mu.outcomes), _as_columns(nu.outcomes)
    if a.shape == b.shape and np.array_equal(a, b):
        return mu.probs, nu.probs
    index = {tuple(r): i for i, r in enumerate(b.tolist())}
    q = np.zeros(len(a))
    for i, r in enumerate(a.tolist()):
        j = index.get(tuple(r))
        if j is None:
            if mu.probs[i] > 0:
                raise ValueError("first distribution is not absolutely continuous w.r.t. the second")
            continue
        q[i] = nu.probs[j]
    return mu.probs, q


def kl_divergence(mu, nu) -> float:
    """KL(mu || nu) in nats; raises when mu is not absolutely continuous w.r.t. nu."""
    p, q = _aligned(mu, nu)
    s = p > 0
    if (q[s] <= 0).any():
        raise ValueError("first distribution is not absolutely continuous w.r.t. the second")
    return float((p[s] * np.log(p[s] / q[s])).sum())


# ---------------------------------------------------------------- Shearer


def _subset_entropy(dist: FiniteDistribution, K: Sequence[int]) -> float:
    if len(K) == 0:
        return 0.0
    return entropy(dist, list(K))


def _check_marginals(K_dist, J: int, p: float) -> np.ndarray:
    marg = np.zeros(J)
    for K, pk in K_dist:
        for j in K:
            marg[j] += pk
    if (marg < p - 1e-12).any():
        j = int(np.argmin(marg))
        raise ValueError(f"P({j} in K) = {marg[j]:.6g} is below p = {p:.6g}")
    return marg


def shearer_check(joint: FiniteDistribution, K_dist, p: float) -> CheckReport:
    """S(X) <= (1/p) S(X_K | K) for K independent of X with P(j in K) >= p.

    ``K_dist`` is a list of (coordinate tuple, probability) pairs.
    """
    J = _as_columns(joint.outcomes).shape[1]
    marg = _check_marginals(K_dist, J, p)
    lhs = entropy(joint, list(range(J)))
    cond = sum(pk * _subset_entropy(joint, tuple(K)) for K, pk in K_dist)
    return inequality("shearer", lhs, cond / p, TOL, marginals=marg, p=p)


def shearer_chain_rule_route(joint: FiniteDistribution, K_dist, p: float) -> CheckReport:
    """Second proof of Shearer through the chain rule.

    p S(X) <= sum_j P(j in K) S(X_j | X_<j) <= E S(X_K).
    """
    J = _as_columns(joint.outcomes).shape[1]
    marg = _check_marginals(K_dist, J, p)
    cond = [conditional_entropy(joint, [j], list(range(j)) or None) for j in range(J)]
    total = sum(cond)
    step1 = inequality("shearer-chain:p*S<=sum", p * total, float(np.dot(marg, cond)), TOL)
    expect = sum(pk * _subset_entropy(joint, tuple(K)) for K, pk in K_dist)
    step2 = inequality("shearer-chain:sum<=E S(X_K)", float(np.dot(marg, cond)), expect, TOL)
    return combine("shearer-chain-rule", [step1, step2])


def lovasz_extension(F: Callable[[frozenset], float], x: Sequence[float]) -> float:
    """Choquet integral of x against the set function F (F(empty) = 0)."""
    order = sorted(range(len(x)), key=lambda j: -x[j])
    val = 0.0
    prefix: set[int] = set()
    prev = F(frozenset())
    for j in order:
        prefix.add(j)
        cur = F(frozenset(prefix))
        val += x[j] * (cur - prev)
        prev = cur
    return val


def shearer_choquet_route(joint: FiniteDistribution, K_dist, p: float) -> CheckReport:
    """First proof of Shearer through the Choquet integral of F(K) = S(X_K).

    p S(X) = F^(p 1) <= F^(E 1_K) <= E F^(1_K) = E S(X_K), using that F is
    monotone and submodular so that its extension is monotone and convex.
    """
    J = _as_columns(joint.outcomes).shape[1]
    marg = _check_marginals(K_dist, J, p)
    cache: dict[frozenset, float] = {}

    def F(K: frozenset) -> float:
        if K not in cache:
            cache[K] = _subset_entropy(joint, tuple(sorted(K)))
        return cache[K]

    full = F(frozenset(range(J)))
    a = lovasz_extension(F, [p] * J)
    b = lovasz_extension(F, list(marg))
    c = sum(pk * F(frozenset(K)) for K, pk in K_dist)
    parts = [
        equality("choquet:extension-at-p", a, p * full, TOL),
        inequality("choquet:monotone", a, b, TOL),
        inequality("choquet:jensen", b, c, TOL),
    ]
    return combine("shearer-choquet", parts)


def entropy_submodularity_check(joint: FiniteDistribution) -> CheckReport:
    """F(K1 & K2) + F(K1 | K2) <= F(K1) + F(K2) over all pairs of coordinate sets."""
    J = _as_columns(joint.outcomes).shape[1]
    if J > 4:
        raise ValueError("at most 4 coordinates supported")
    subsets = [frozenset(c) for k in range(J + 1) for c in itertools.combinations(range(J), k)]
    F = {K: _subset_entropy(joint, tuple(sorted(K))) for K in subsets}
    worst = None
    for K1, K2 in itertools.combinations_with_replacement(subsets, 2):
        lhs = F[K1 & K2] + F[K1 | K2]
        rhs = F[K1] + F[K2]
        if worst is None or rhs - lhs < worst[2] - worst[1]:
            worst = ((sorted(K1), sorted(K2)), lhs, rhs)
    pair, lhs, rhs = worst
    return inequality("submodularity", lhs, rhs, TOL, witness=pair, worst_pair=pair)


# ---------------------------------------------------------------- free energy


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(x, dtype=np.uint64)).astype(np.int64)


def free_energy(
    dist: FiniteDistribution,
    lam: float,
    X: View = None,
    size: Callable[[np.ndarray], np.ndarray] | None = None,
    given: View = None,
    event: Event = None,
) -> float:
    """I(X | given; event) = S(X | given; event) + (log lam) E[size(X) | event].

    Defaults treat each outcome as a configuration bitmask: X is the whole
    outcome and ``size`` its popcount.
    """
    if X is None:
        X = lambda o: o  # noqa: E731
    if size is None:
        size = lambda o: _popcount(_view(o, X))  # noqa: E731
    s = conditional_entropy(dist, X, given, event)
    if lam == 1:
        return s
    return s + math.log(lam) * dist.expect(size, event)


@dataclass(frozen=True)
class FreeEnergyInput:
    """A distribution over configuration bitmasks together with the fugacity."""

    dist: FiniteDistribution
    lam: float
    graph: object = None

    def __post_init__(self) -> None:
        if self.lam <= 0:
            raise ValueError("fugacity must be positive")
        g = self.graph
        if g is not None:
            from .hardcore import independent_mask

            ok = independent_mask(g, self.dist.outcomes)
            if not ok[self.dist.probs > 0].all():
                raise ValueError("distribution charges a non-independent configuration")


def free_energy_I(inp: FreeEnergyInput | FiniteDistribution, lam: float | None = None) -> float:
    """S(sigma) + (log lam) E|sigma| for a distribution over configurations."""
    if isinstance(inp, FreeEnergyInput):
        return free_energy(inp.dist, inp.lam)
    if lam is None:
        raise ValueError("fugacity required")
    return free_energy(inp, lam)


def prop_I_le_logplam_check(
    dist: FiniteDistribution,
    lam: float,
    sigma_v: View,
    X: View,
    Y: View = None,
    event: Event = None,
) -> CheckReport:
    """I(sigma_v | X, Y; E) <= log(1+lam) E[X | E] for binary X >= sigma_v."""
    out = dist.outcomes
    sv = np.asarray(_view(out, sigma_v)).reshape(-1)
    xv = np.asarray(_view(out, X)).reshape(-1)
    supp = dist.probs > 0
    if not np.isin(xv[supp], (0, 1)).all() or (sv[supp] > xv[supp]).any():
        raise ValueError("need a binary X with sigma_v <= X on the support")
    if Y is None:
        given = lambda o: _view(o, X)  # noqa: E731
    else:
        given = lambda o: np.column_stack(  # noqa: E731
            [_view(o, X).reshape(len(o), -1), _view(o, Y).reshape(len(o), -1)]
        )
    lhs = free_energy(
        dist,
        lam,
        X=lambda o: _view(o, sigma_v),
        size=lambda o: np.asarray(_view(o, sigma_v)).reshape(-1),
        given=given,
        event=event,
    )
    rhs = math.log1p(lam) * dist.expect(lambda o: np.asarray(_view(o, X)).reshape(-1), event)
    return inequality("prop-i-le-logplam", lhs, rhs, TOL)


def variational_identity_check(g, lam, dist: FiniteDistribution, tol: float = TOL) -> CheckReport:
    """I(dist) = log Z - KL(dist || mu) for a distribution on independent sets."""
    from .hardcore import exact_distribution, partition_bruteforce

    FreeEnergyInput(dist, float(lam), g)
    mu = exact_distribution(g, lam)
    I = free_energy(dist, float(lam))
    kl = kl_divergence(dist, mu)
    logz = partition_bruteforce(g, lam).log_z
    return equality("variational-identity", I, logz - kl, tol, I=I, KL=kl, log_z=logz)


def I_zeta_identity_check(g, lam, event, tol: float = TOL) -> CheckReport:
    """log zeta(E) = I(sigma | E) for sigma Gibbs-distributed, E a vectorised event."""
    from .hardcore import exact_distribution, zeta

    mu = exact_distribution(g, lam)
    inE = np.asarray(event(mu.outcomes), dtype=bool)
    if not inE.any():
        raise ValueError("empty event")
    zE = zeta(inE.astype(np.int64), mu.outcomes, lam, exact=False)
    I = free_energy(mu, float(lam), event=inE)
    return equality("i-zeta-identity", math.log(zE), I, tol, zeta=zE)
