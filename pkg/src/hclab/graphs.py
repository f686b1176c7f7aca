"""Graph builders: tori, Hamming-code dominating sets, dominating trees,
linear gadgets, blow-ups, torus automorphisms and a plain-text file format."""

from __future__ import annotations

import io
import itertools
import os
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

EVEN, ODD = 0, 1


class GraphFormatError(ValueError):
    """Malformed graph file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class BipartiteGraph:
    """Simple undirected graph with optional bipartition labels.

    ``adjacency[v]`` is the sorted tuple of neighbours of ``v``; ``parity[v]``
    is 0 (even) or 1 (odd) when a bipartition is attached.
    """

    adjacency: tuple[tuple[int, ...], ...]
    parity: tuple[int, ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        n = len(self.adjacency)
        for v, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise ValueError(f"neighbours of {v} must be sorted and distinct")
            for u in nbrs:
                if u == v:
                    raise ValueError(f"self-loop at {v}")
                if not 0 <= u < n:
                    raise ValueError(f"neighbour {u} of {v} out of range")
                if v not in self.adjacency[u]:
                    raise ValueError(f"adjacency not symmetric at {v}-{u}")
        if self.parity is not None:
            if len(self.parity) != n or any(p not in (EVEN, ODD) for p in self.parity):
                raise ValueError("parity must be a 0/1 label per vertex")
            for u, v in self.edges:
                if self.parity[u] == self.parity[v]:
                    raise ValueError(f"edge {u}-{v} joins two vertices of the same class")

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        parity: Sequence[int] | None = None,
        name: str = "",
    ) -> "BipartiteGraph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        adj = tuple(tuple(sorted(s)) for s in nbrs)
        return cls(adj, None if parity is None else tuple(int(p) for p in parity), name)

    @property
    def n(self) -> int:
        return len(self.adjacency)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        return tuple((u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def degree(self) -> int | None:
        """Common degree if the graph is regular, else None."""
        degs = {len(nb) for nb in self.adjacency}
        return degs.pop() if len(degs) == 1 else None

    @cached_property
    def even(self) -> tuple[int, ...]:
        self._need_parity()
        return tuple(v for v in range(self.n) if self.parity[v] == EVEN)

    @cached_property
    def odd(self) -> tuple[int, ...]:
        self._need_parity()
        return tuple(v for v in range(self.n) if self.parity[v] == ODD)

    @cached_property
    def even_mask(self) -> int:
        return sum(1 << v for v in self.even)

    @cached_property
    def odd_mask(self) -> int:
        return sum(1 << v for v in self.odd)

    @cached_property
    def nbr_masks(self) -> tuple[int, ...]:
        """Neighbourhood of each vertex as an integer bitmask."""
        return tuple(sum(1 << u for u in nb) for nb in self.adjacency)

    def _need_parity(self) -> None:
        if self.parity is None:
            raise ValueError("graph has no bipartition attached")

    def require_regular(self, min_degree: int = 1) -> int:
        d = self.degree
        if d is None:
            raise ValueError("graph is not regular")
        if d < min_degree:
            raise ValueError(f"degree {d} below required minimum {min_degree}")
        return d

    def is_connected(self) -> bool:
        return len(bfs_order(self, 0)) == self.n if self.n else True


def bfs_order(g: BipartiteGraph, root: int) -> list[int]:
    seen = {root}
    order = [root]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in g.adjacency[v]:
            if u not in seen:
                seen.add(u)
                order.append(u)
                queue.append(u)
    return order


def bfs_distances(g: BipartiteGraph, root: int) -> list[int]:
    """Graph distances from ``root`` (-1 when unreachable)."""
    dist = [-1] * g.n
    dist[root] = 0
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for u in g.adjacency[v]:
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                queue.append(u)
    return dist


def two_coloring(g: BipartiteGraph) -> tuple[int, ...] | None:
    """Proper 2-colouring found by BFS (component roots even), or None."""
    color = [-1] * g.n
    for s in range(g.n):
        if color[s] >= 0:
            continue
        color[s] = EVEN
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for u in g.adjacency[v]:
                if color[u] < 0:
                    color[u] = 1 - color[v]
                    queue.append(u)
                elif color[u] == color[v]:
                    return None
    return tuple(color)


# ---------------------------------------------------------------- tori


@dataclass(frozen=True)
class TorusSpec:
    L: int
    d: int

    def __post_init__(self) -> None:
        if self.L < 2 or self.d < 1:
            raise ValueError("torus needs L >= 2 and d >= 1")

    @property
    def n(self) -> int:
        return self.L**self.d

    @property
    def degree(self) -> int:
        return 2 * self.d if self.L >= 3 else self.d


def torus_coords(v: int, L: int, d: int) -> tuple[int, ...]:
    """Row-major coordinates of vertex index ``v`` (first coordinate slowest)."""
    out = []
    for _ in range(d):
        v, r = divmod(v, L)
        out.append(r)
    return tuple(reversed(out))


def torus_index(x: Sequence[int], L: int) -> int:
    v = 0
    for c in x:
        v = v * L + (c % L)
    return v


def build_torus(spec: TorusSpec) -> BipartiteGraph:
    """Discrete torus Z_L^d; for L = 2 the two parallel edges become one."""
    L, d = spec.L, spec.d
    edges = set()
    for v in range(spec.n):
        x = torus_coords(v, L, d)
        for i in range(d):
            y = list(x)
            y[i] = (y[i] + 1) % L
            u = torus_index(y, L)
            edges.add((min(u, v), max(u, v)))
    parity = None
    if L % 2 == 0:
        parity = [sum(torus_coords(v, L, d)) % 2 for v in range(spec.n)]
    return BipartiteGraph.from_edges(spec.n, sorted(edges), parity, name=f"Z_{L}^{d}")


def cycle(n: int) -> BipartiteGraph:
    return build_torus(TorusSpec(n, 1))


def hypercube(d: int) -> BipartiteGraph:
    return build_torus(TorusSpec(2, d))


def complete_bipartite(a: int, b: int) -> BipartiteGraph:
    edges = [(i, a + j) for i in range(a) for j in range(b)]
    return BipartiteGraph.from_edges(a + b, edges, [0] * a + [1] * b, name=f"K_{a},{b}")


def random_regular_bipartite(half: int, degree: int, rng: np.random.Generator) -> BipartiteGraph:
    """Random simple connected ``degree``-regular bipartite graph with ``half``
    vertices per side.

    Starts from the circulant graph i ~ half + (i + k) mod half, k < degree,
    relabels both sides at random and mixes with degree-preserving double-edge
    swaps; retried until connected.
    """
    if not 1 <= degree <= half:
        raise ValueError("need 1 <= degree <= half")
    if degree == 1 and half > 1:
        raise ValueError("a 1-regular graph on more than two vertices is disconnected")
    while True:
        left = rng.permutation(half)
        right = rng.permutation(half)
        edges = {(int(left[i]), int(right[(i + k) % half])) for i in range(half) for k in range(degree)}
        elist = sorted(edges)
        for _ in range(10 * len(elist)):
            i, j = rng.integers(len(elist), size=2)
            (a, b), (c, d) = elist[i], elist[j]
            if a == c or b == d or (a, d) in edges or (c, b) in edges:
                continue
            edges -= {(a, b), (c, d)}
            edges |= {(a, d), (c, b)}
            elist[i], elist[j] = (a, d), (c, b)
        g = BipartiteGraph.from_edges(2 * half, [(a, half + b) for a, b in edges], [0] * half + [1] * half)
        if g.is_connected():
            return g


# ---------------------------------------------------------------- automorphisms


@dataclass(frozen=True)
class TorusAutomorphism:
    """x -> (signs[i] * x[perm[i]] + translation[i]) mod L, coordinatewise."""

    spec: TorusSpec
    translation: tuple[int, ...]
    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def apply(self, v: int) -> int:
        L, d = self.spec.L, self.spec.d
        x = torus_coords(v, L, d)
        return torus_index(
            [self.signs[i] * x[self.perm[i]] + self.translation[i] for i in range(d)], L
        )

    @cached_property
    def vertex_map(self) -> np.ndarray:
        return np.array([self.apply(v) for v in range(self.spec.n)], dtype=np.int64)

    def apply_edges(self, edges: Iterable[tuple[int, int]]) -> frozenset[tuple[int, int]]:
        vm = self.vertex_map
        out = set()
        for u, v in edges:
            a, b = int(vm[u]), int(vm[v])
            out.add((min(a, b), max(a, b)))
        return frozenset(out)


def identity_automorphism(spec: TorusSpec) -> TorusAutomorphism:
    return TorusAutomorphism(spec, (0,) * spec.d, tuple(range(spec.d)), (1,) * spec.d)


def sample_torus_automorphism(spec: TorusSpec, rng: np.random.Generator) -> TorusAutomorphism:
    """Uniform draw from translations x coordinate permutations x sign flips."""
    t = tuple(int(c) for c in rng.integers(0, spec.L, size=spec.d))
    p = tuple(int(c) for c in rng.permutation(spec.d))
    s = tuple(int(c) for c in rng.choice([-1, 1], size=spec.d))
    return TorusAutomorphism(spec, t, p, s)


def all_torus_automorphisms(spec: TorusSpec) -> Iterator[TorusAutomorphism]:
    """Every (translation, permutation, signs) triple, each once.

    The uniform distribution over this list is exactly the law of
    :func:`sample_torus_automorphism`.
    """
    for t in itertools.product(range(spec.L), repeat=spec.d):
        for p in itertools.permutations(range(spec.d)):
            for s in itertools.product((1, -1), repeat=spec.d):
                yield TorusAutomorphism(spec, t, p, s)


# ---------------------------------------------------------------- dominating sets


def hamming_code(r: int) -> frozenset[tuple[int, ...]]:
    """Binary Hamming code of length 2^r - 1 (words as bit tuples).

    A word is a codeword when the XOR of the (1-based) positions of its ones
    is zero. ``r = 1`` gives the length-1 code ``{(0,)}``, which is what the
    torus construction needs in dimensions 1 and 2.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    n = 2**r - 1
    code = set()
    for word in itertools.product((0, 1), repeat=n):
        syndrome = 0
        for i, bit in enumerate(word):
            if bit:
                syndrome ^= i + 1
        if syndrome == 0:
            code.add(word)
    return frozenset(code)


def hamming_length(d: int) -> int:
    """Largest 2^r - 1 not exceeding d."""
    r = 1
    while 2 ** (r + 1) - 1 <= d:
        r += 1
    return 2**r - 1


def is_dominating(g: BipartiteGraph, D: Iterable[int]) -> bool:
    Dset = set(D)
    return all(v in Dset or any(u in Dset for u in g.adjacency[v]) for v in range(g.n))


def _lifted_set(spec: TorusSpec, code: frozenset, shift: tuple[int, ...], dp: int) -> list[int]:
    out = []
    for v in range(spec.n):
        x = torus_coords(v, spec.L, spec.d)
        word = tuple((x[i] + shift[i]) % 2 for i in range(dp))
        if word in code:
            out.append(v)
    return out


def dominating_set_torus(spec: TorusSpec) -> tuple[int, ...]:
    """Dominating set of Z_L^d of size below 2L^d/d built from a Hamming code.

    Vertices whose first d' coordinates reduce mod 2 to a codeword (d' the
    largest Hamming length <= d). For odd L the wrap-around breaks the exact
    parity structure, so all 2^d' shifted codes are tried and the smallest
    dominating one is returned (first in lexicographic shift order on ties).
    """
    dp = hamming_length(spec.d)
    r = (dp + 1).bit_length() - 1
    code = hamming_code(r)
    g = build_torus(spec)
    bound = 2 * spec.n / spec.d
    if spec.L % 2 == 0:
        D = _lifted_set(spec, code, (0,) * dp, dp)
        assert is_dominating(g, D) and len(D) < bound
        return tuple(D)
    best = None
    for shift in itertools.product((0, 1), repeat=dp):
        D = _lifted_set(spec, code, shift, dp)
        if len(D) < bound and is_dominating(g, D) and (best is None or len(D) < len(best)):
            best = D
    if best is None:
        raise RuntimeError("no dominating shift found")
    return tuple(best)


# ---------------------------------------------------------------- trees


@dataclass(frozen=True)
class TreeSubgraph:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    root: int

    def __post_init__(self) -> None:
        vs = set(self.vertices)
        if len(self.edges) < 1:
            raise ValueError("tree must have at least one edge")
        if len(self.edges) != len(vs) - 1:
            raise ValueError("edge count must be vertex count - 1")
        if self.root not in vs:
            raise ValueError("root not in tree")
        adj: dict[int, list[int]] = {v: [] for v in vs}
        for u, v in self.edges:
            if u not in vs or v not in vs:
                raise ValueError("edge endpoint outside vertex set")
            adj[u].append(v)
            adj[v].append(u)
        seen = {self.root}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        if seen != vs:
            raise ValueError("tree is not connected")


def _bfs_tree(vertices: Iterable[int], nbrs, root: int) -> list[tuple[int, int]]:
    """Spanning tree edges of a connected vertex set via BFS in sorted order."""
    vs = set(vertices)
    seen = {root}
    queue = deque([root])
    edges = []
    while queue:
        v = queue.popleft()
        for u in sorted(nbrs(v)):
            if u in vs and u not in seen:
                seen.add(u)
                edges.append((min(u, v), max(u, v)))
                queue.append(u)
    if seen != vs:
        raise ValueError("vertex set is not connected")
    return edges


def _shortest_path(g: BipartiteGraph, a: int, b: int) -> list[int]:
    """BFS path with neighbours scanned in increasing order (first discovery wins)."""
    parent = {a: -1}
    queue = deque([a])
    while queue:
        v = queue.popleft()
        if v == b:
            break
        for u in g.adjacency[v]:
            if u not in parent:
                parent[u] = v
                queue.append(u)
    path = [b]
    while path[-1] != a:
        path.append(parent[path[-1]])
    return path[::-1]


def dominating_tree(g: BipartiteGraph, D: Iterable[int]) -> TreeSubgraph:
    """Tree subgraph containing the dominating set D with at most 3|D| vertices.

    D is joined into an auxiliary graph (pairs at distance <= 3), a BFS
    spanning tree of it is lifted to shortest paths in g, and a BFS spanning
    tree of the union is returned, rooted at its smallest vertex.
    """
    D = sorted(set(D))
    if not D:
        raise ValueError("dominating set is empty")
    if not g.is_connected():
        raise ValueError("graph is not connected")
    if not is_dominating(g, D):
        raise ValueError("vertex set is not dominating")
    if len(D) == 1:
        v = D[0]
        u = g.adjacency[v][0]
        return TreeSubgraph(tuple(sorted((u, v))), ((min(u, v), max(u, v)),), min(u, v))
    dist = {a: bfs_distances(g, a) for a in D}
    aux = {a: [b for b in D if b != a and dist[a][b] <= 3] for a in D}
    aux_tree = _bfs_tree(D, lambda a: aux[a], D[0])
    union_edges = set()
    for a, b in aux_tree:
        path = _shortest_path(g, a, b)
        for x, y in zip(path, path[1:]):
            union_edges.add((min(x, y), max(x, y)))
    union_adj: dict[int, set[int]] = {}
    for x, y in union_edges:
        union_adj.setdefault(x, set()).add(y)
        union_adj.setdefault(y, set()).add(x)
    verts = sorted(union_adj)
    root = verts[0]
    edges = _bfs_tree(verts, lambda v: union_adj[v], root)
    return TreeSubgraph(tuple(verts), tuple(sorted(edges)), root)


# ---------------------------------------------------------------- gadgets


@dataclass(frozen=True)
class LinearGadget:
    graph: BipartiteGraph
    left: int
    right: int
    blocks: int


def build_linear_gadget(m: int) -> LinearGadget:
    """Chain of m double-diamond blocks with pendant endpoints.

    Vertex 0 is the left endpoint, block i occupies 1+6i .. 6+6i in the order
    x, a, b, c, d, y, and the right endpoint is 6m+1. Edges: x-a, x-b,
    {a,b}x{c,d}, c-y, d-y, y_i - x_{i+1}, left - x_1, y_m - right.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    left, right = 0, 6 * m + 1
    edges = []
    prev = left
    for i in range(m):
        x, a, b, c, d, y = range(1 + 6 * i, 7 + 6 * i)
        edges += [(prev, x), (x, a), (x, b), (a, c), (a, d), (b, c), (b, d), (c, y), (d, y)]
        prev = y
    edges.append((prev, right))
    n = 6 * m + 2
    tmp = BipartiteGraph.from_edges(n, edges)
    parity = two_coloring(tmp)
    assert parity is not None
    g = BipartiteGraph.from_edges(n, edges, parity, name=f"gadget_{m}")
    return LinearGadget(g, left, right, m)


def blow_up(g: BipartiteGraph, m: int) -> BipartiteGraph:
    """m-blow-up: vertex (v, i) has index v*m + i; (v,i)~(u,j) iff v~u."""
    if m < 1:
        raise ValueError("m must be >= 1")
    edges = [
        (u * m + i, v * m + j) for u, v in g.edges for i in range(m) for j in range(m)
    ]
    parity = None if g.parity is None else [g.parity[v] for v in range(g.n) for _ in range(m)]
    return BipartiteGraph.from_edges(g.n * m, edges, parity, name=f"{g.name}[x{m}]")


def stretch_by_gadget(h: BipartiteGraph, m: int) -> BipartiteGraph:
    """Replace each edge u<v of h by a linear gadget with left=u, right=v.

    Vertices of h keep their indices; gadget interiors are appended edge by
    edge in sorted edge order.
    """
    if h.parity is None:
        raise ValueError("h must carry a bipartition")
    gad = build_linear_gadget(m)
    inner = gad.graph.n - 2
    edges = []
    parity = list(h.parity)
    nxt = h.n
    for u, v in h.edges:
        relabel = {gad.left: u, gad.right: v}
        for k in range(1, gad.graph.n - 1):
            relabel[k] = nxt + k - 1
        flip = h.parity[u] ^ gad.graph.parity[gad.left]
        for k in range(1, gad.graph.n - 1):
            parity.append(gad.graph.parity[k] ^ flip)
        edges += [(relabel[a], relabel[b]) for a, b in gad.graph.edges]
        nxt += inner
    return BipartiteGraph.from_edges(nxt, edges, parity, name=f"{h.name}~{m}")


# ---------------------------------------------------------------- file format


def dumps_graph(g: BipartiteGraph) -> str:
    deg = g.degree
    lines = [f"n {g.n} delta {deg if deg is not None else 'irregular'}"]
    if g.parity is None:
        lines.append("parity " + "?" * g.n)
    else:
        lines.append("parity " + "".join("EO"[p] for p in g.parity))
    lines += [f"{u} {v}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> BipartiteGraph:
    rows = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, ln) for i, ln in rows if ln and not ln.startswith("#")]
    if len(rows) < 2:
        raise GraphFormatError("missing header lines", rows[0][0] if rows else 1)
    (ln1, head), (ln2, par) = rows[0], rows[1]
    parts = head.split()
    if len(parts) != 4 or parts[0] != "n" or parts[2] != "delta":
        raise GraphFormatError("expected 'n <count> delta <degree|irregular>'", ln1)
    try:
        n = int(parts[1])
        delta = None if parts[3] == "irregular" else int(parts[3])
    except ValueError:
        raise GraphFormatError("non-integer count or degree", ln1) from None
    if n < 1:
        raise GraphFormatError("vertex count must be positive", ln1)
    pparts = par.split()
    if len(pparts) != 2 or pparts[0] != "parity" or len(pparts[1]) != n:
        raise GraphFormatError(f"expected 'parity' followed by {n} labels", ln2)
    labels = pparts[1]
    if set(labels) - set("EO?"):
        raise GraphFormatError("parity labels must be E, O or ?", ln2)
    if "?" in labels and set(labels) != {"?"}:
        raise GraphFormatError("parity must be fully given or fully '?'", ln2)
    parity = None if labels[0] == "?" else [0 if c == "E" else 1 for c in labels]
    seen: set[tuple[int, int]] = set()
    for ln, row in rows[2:]:
        parts = row.split()
        if len(parts) != 2:
            raise GraphFormatError("expected an edge 'u v'", ln)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("edge endpoints must be integers", ln) from None
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}", ln)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError("edge endpoint out of range", ln)
        if u > v:
            raise GraphFormatError("edge must be written with u < v", ln)
        if (u, v) in seen:
            raise GraphFormatError(f"duplicate edge {u} {v}", ln)
        if parity is not None and parity[u] == parity[v]:
            raise GraphFormatError(f"edge {u} {v} joins two vertices of the same class", ln)
        seen.add((u, v))
    g = BipartiteGraph.from_edges(n, seen, parity)
    if delta is not None and g.degree != delta:
        raise GraphFormatError(f"declared degree {delta} does not match the edges", ln1)
    if delta is None and g.degree is not None:
        raise GraphFormatError(f"graph is {g.degree}-regular but declared irregular", ln1)
    return g


def save_graph(g: BipartiteGraph, path: str | os.PathLike) -> None:
    write_text_atomic(path, dumps_graph(g))


def load_graph(path: str | os.PathLike) -> BipartiteGraph:
    with open(path, encoding="utf-8") as fh:
        return loads_graph(fh.read())


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    """Write UTF-8 text through a temporary file and rename into place."""
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with io.open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
