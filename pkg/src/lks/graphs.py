"""Core graph and tree types, density primitives, and instance generators.

Vertices are always the integers ``0..n-1``.  Graphs are simple and
undirected, immutable after construction, and safe to share between
threads.  Edges are stored as ``(u, v)`` tuples with ``u < v``.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class GraphError(ValueError):
    """Raised on malformed graph/tree inputs.  Messages start with a short
    machine-readable code, e.g. ``"empty-side: ..."``."""


def as_fraction(x) -> Fraction:
    """Convert int/str/Fraction/float to an exact Fraction.

    Floats go through their decimal repr so that e.g. 0.05 becomes 1/20
    rather than the nearest binary fraction.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def normalize_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class Graph:
    """Immutable simple undirected graph on vertices ``0..n-1``."""

    __slots__ = ("n", "edges", "_adj", "_adj_sets", "_degrees", "_masks", "meta")

    def __init__(self, n: int, edges: Iterable[Sequence[int]], meta: dict | None = None):
        if n < 0:
            raise GraphError(f"bad-order: n={n}")
        edge_set = set()
        for e in edges:
            u, v = int(e[0]), int(e[1])
            if u == v:
                raise GraphError(f"self-loop: vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"vertex-range: edge ({u},{v}) outside 0..{n - 1}")
            edge_set.add(normalize_edge(u, v))
        self.n = n
        self.edges = frozenset(edge_set)
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edge_set:
            adj[u].append(v)
            adj[v].append(u)
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        self._adj_sets = tuple(frozenset(a) for a in adj)
        self._degrees = tuple(len(a) for a in adj)
        self._masks: tuple[int, ...] | None = None
        self.meta = meta

    # -- basic queries -------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.edges)

    def vertices(self) -> range:
        return range(self.n)

    def degree(self, v: int) -> int:
        return self._degrees[v]

    def degrees(self) -> tuple[int, ...]:
        return self._degrees

    def min_degree(self) -> int:
        return min(self._degrees) if self.n else 0

    def max_degree(self) -> int:
        return max(self._degrees) if self.n else 0

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def nbr_set(self, v: int) -> frozenset[int]:
        return self._adj_sets[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj_sets[u]

    def deg_into(self, v: int, s) -> int:
        """Number of neighbors of v inside the vertex collection s."""
        nb = self._adj_sets[v]
        if len(nb) < len(s):
            return sum(1 for u in nb if u in s)
        return sum(1 for u in s if u in nb)

    def adjacency_masks(self) -> tuple[int, ...]:
        """Bitmask adjacency rows, built lazily (used by exact enumerations)."""
        if self._masks is None:
            masks = [0] * self.n
            for u, v in self.edges:
                masks[u] |= 1 << v
                masks[v] |= 1 << u
            self._masks = tuple(masks)
        return self._masks

    def cross_edges(self, a, b) -> frozenset[tuple[int, int]]:
        """Edges with one endpoint in a and the other in b (a, b disjoint)."""
        a = frozenset(a)
        b = frozenset(b)
        out = set()
        small, other, flip = (a, b, False) if len(a) <= len(b) else (b, a, True)
        for u in small:
            for w in self._adj_sets[u].intersection(other):
                out.add(normalize_edge(u, w))
        return frozenset(out)

    def edge_count_between(self, a, b) -> int:
        return len(self.cross_edges(a, b))

    # -- derived graphs (vertex ids preserved) -------------------------

    def without_edges(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        drop = {normalize_edge(u, v) for u, v in edges}
        return Graph(self.n, self.edges - drop)

    def without_vertex_edges(self, vs) -> "Graph":
        vs = set(vs)
        keep = [e for e in self.edges if e[0] not in vs and e[1] not in vs]
        return Graph(self.n, keep)

    def edge_subgraph(self, edges: Iterable[tuple[int, int]]) -> "Graph":
        keep = {normalize_edge(u, v) for u, v in edges}
        bad = keep - self.edges
        if bad:
            raise GraphError(f"edge-subset: {sorted(bad)[:3]} not in graph")
        return Graph(self.n, keep)

    # -- value semantics ------------------------------------------------

    def __eq__(self, other):
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        doc = {"n": self.n, "edges": sorted(list(e) for e in self.edges)}
        if self.meta is not None:
            doc["meta"] = self.meta
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "Graph":
        doc = json.loads(text)
        return Graph(int(doc["n"]), doc["edges"], meta=doc.get("meta"))

    def to_dot(self, name: str = "g") -> str:
        lines = [f"graph {name} {{"]
        for v in range(self.n):
            lines.append(f"  {v};")
        for u, v in sorted(self.edges):
            lines.append(f"  {u} -- {v};")
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class BipartitePair:
    """Two disjoint vertex sets inside a host graph.

    Density and degree queries only count host edges crossing between the
    two sides; edges inside a side are invisible to this view.
    """

    side_a: frozenset[int]
    side_b: frozenset[int]
    host: Graph

    def __post_init__(self):
        object.__setattr__(self, "side_a", frozenset(self.side_a))
        object.__setattr__(self, "side_b", frozenset(self.side_b))
        if self.side_a & self.side_b:
            raise GraphError(f"side-overlap: {sorted(self.side_a & self.side_b)[:3]}")

    def cross_edge_count(self) -> int:
        return sum(self.host.deg_into(u, self.side_b) for u in self.side_a)


def density(pair: BipartitePair) -> Fraction:
    """Cross-edge count divided by |A|*|B|, exact."""
    a, b = pair.side_a, pair.side_b
    if not a or not b:
        raise GraphError("empty-side: density needs both sides nonempty")
    return Fraction(pair.cross_edge_count(), len(a) * len(b))


def min_degree_across(pair: BipartitePair) -> int:
    """Minimum over all pair vertices of their degree into the other side."""
    a, b = pair.side_a, pair.side_b
    if not a or not b:
        raise GraphError("empty-side: min_degree_across needs both sides nonempty")
    da = min(pair.host.deg_into(u, b) for u in a)
    db = min(pair.host.deg_into(w, a) for w in b)
    return min(da, db)


class RootedTree:
    """Immutable rooted tree on vertices ``0..n-1`` with ``n-1`` edges."""

    __slots__ = ("n", "root", "parent", "_children", "_adj", "_depth", "edges")

    def __init__(self, n: int, parent: Sequence[int | None], root: int):
        if n <= 0:
            raise GraphError("bad-order: tree needs at least one vertex")
        if not (0 <= root < n):
            raise GraphError(f"vertex-range: root {root}")
        parent = tuple(parent)
        if len(parent) != n:
            raise GraphError("parent-length: parent map must cover all vertices")
        if parent[root] is not None:
            raise GraphError("root-parent: root must have no parent")
        children: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if v == root:
                continue
            if p is None or not (0 <= p < n):
                raise GraphError(f"parent-range: vertex {v}")
            children[p].append(v)
        # reachability from root doubles as the acyclicity check
        depth = [-1] * n
        depth[root] = 0
        stack = [root]
        seen = 1
        while stack:
            v = stack.pop()
            for c in children[v]:
                if depth[c] != -1:
                    raise GraphError("not-a-tree: duplicate reach")
                depth[c] = depth[v] + 1
                stack.append(c)
                seen += 1
        if seen != n:
            raise GraphError("not-a-tree: disconnected parent map")
        self.n = n
        self.root = root
        self.parent = parent
        self._children = tuple(tuple(sorted(c)) for c in children)
        adj: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(parent):
            if p is not None:
                adj[v].append(p)
                adj[p].append(v)
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        self._depth = tuple(depth)
        self.edges = frozenset(normalize_edge(v, p) for v, p in enumerate(parent) if p is not None)

    @staticmethod
    def from_edges(n: int, edges: Iterable[Sequence[int]], root: int = 0) -> "RootedTree":
        g = Graph(n, edges)
        if g.m != n - 1:
            raise GraphError(f"not-a-tree: {g.m} edges on {n} vertices")
        parent: list[int | None] = [None] * n
        seen = [False] * n
        seen[root] = True
        queue = [root]
        while queue:
            v = queue.pop()
            for u in g.neighbors(v):
                if not seen[u]:
                    seen[u] = True
                    parent[u] = v
                    queue.append(u)
        if not all(seen):
            raise GraphError("not-a-tree: disconnected edge set")
        return RootedTree(n, parent, root)

    @property
    def k(self) -> int:
        """Edge count."""
        return self.n - 1

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[v]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def depth(self, v: int) -> int:
        return self._depth[v]

    def color_class(self, v: int) -> int:
        """Bipartition class of v (depth parity)."""
        return self._depth[v] % 2

    def bfs_order(self) -> list[int]:
        order = [self.root]
        i = 0
        while i < len(order):
            order.extend(self._children[order[i]])
            i += 1
        return order

    def postorder(self) -> list[int]:
        return list(reversed(self.bfs_order()))

    def tree_degree(self, v: int) -> int:
        return len(self._adj[v])

    def __eq__(self, other):
        return (
            isinstance(other, RootedTree)
            and self.n == other.n
            and self.root == other.root
            and self.parent == other.parent
        )

    def __hash__(self):
        return hash((self.n, self.root, self.parent))

    def __repr__(self):
        return f"RootedTree(n={self.n}, root={self.root})"

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "edges": sorted(list(e) for e in self.edges), "root": self.root},
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "RootedTree":
        doc = json.loads(text)
        return RootedTree.from_edges(int(doc["n"]), doc["edges"], int(doc["root"]))

    def to_dot(self, name: str = "t") -> str:
        lines = [f"graph {name} {{", f"  // root {self.root}"]
        for u, v in sorted(self.edges):
            lines.append(f"  {u} -- {v};")
        lines.append("}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def complete_graph(n: int) -> Graph:
    return Graph(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def complete_bipartite(a: int, b: int) -> Graph:
    """K_{a,b}: side one is 0..a-1, side two is a..a+b-1."""
    return Graph(a + b, [(u, a + w) for u in range(a) for w in range(b)])


def cycle_graph(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def circulant_graph(n: int, offsets: Sequence[int]) -> Graph:
    edges = set()
    for d in offsets:
        d %= n
        if d == 0:
            continue
        for i in range(n):
            edges.add(normalize_edge(i, (i + d) % n))
    return Graph(n, edges)


def disjoint_union(*graphs: Graph) -> Graph:
    edges = []
    offset = 0
    for g in graphs:
        edges.extend((u + offset, v + offset) for u, v in g.edges)
        offset += g.n
    return Graph(offset, edges)


def random_graph(n: int, p, seed: int) -> Graph:
    """Seeded G(n, p)."""
    p = as_fraction(p)
    rng = random.Random(seed)
    edges = [
        (u, v) for u in range(n) for v in range(u + 1, n) if Fraction(str(rng.random())) < p
    ]
    return Graph(n, edges)


def gen_extremal_lks(k: int) -> Graph:
    """Complete graph on k+1 vertices minus all edges inside an independent
    set of size (k+1)/2 + 1.

    The first ``n/2 - 1`` vertices keep degree k; the remaining ``n/2 + 1``
    form the independent set and have degree ``n/2 - 1``.  The independent
    set is recorded in ``meta["independent_set"]``.
    """
    if k % 2 == 0:
        raise GraphError(f"n-parity: k must be odd, got {k}")
    if k < 3:
        raise GraphError(f"bad-order: k must be >= 3, got {k}")
    n = k + 1
    clique_size = n // 2 - 1
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if u < clique_size or v < clique_size
    ]
    meta = {"independent_set": list(range(clique_size, n)), "k": k}
    return Graph(n, edges, meta=meta)


def _regular_circulant_edges(vertices: Sequence[int], d: int) -> set[tuple[int, int]]:
    """d-regular graph on the given vertex list via circulant offsets.

    Requires d < len(vertices) and d*len(vertices) even.
    """
    a = len(vertices)
    if d >= a or (d * a) % 2 != 0:
        raise GraphError(f"infeasible: {d}-regular on {a} vertices")
    edges = set()
    half = d // 2
    for t in range(1, half + 1):
        for i in range(a):
            edges.add(normalize_edge(vertices[i], vertices[(i + t) % a]))
    if d % 2 == 1:
        for i in range(a // 2):
            edges.add(normalize_edge(vertices[i], vertices[i + a // 2]))
    return edges


def _biregular_edges(
    left: Sequence[int], right: Sequence[int], d_left: int, d_right: int
) -> set[tuple[int, int]]:
    """Simple bipartite graph, every left vertex of degree d_left and every
    right vertex of degree d_right, via cyclic intervals."""
    a, b = len(left), len(right)
    if a * d_left != b * d_right:
        raise GraphError(f"infeasible: stub mismatch {a}*{d_left} != {b}*{d_right}")
    if d_left > b or d_right > a:
        raise GraphError("infeasible: degree exceeds opposite side")
    edges = set()
    for i in range(a):
        for t in range(d_left):
            edges.add(normalize_edge(left[i], right[(i * d_left + t) % b]))
    return edges


def _edge_swap_shuffle(
    edges: set[tuple[int, int]], forbidden, rng: random.Random, rounds: int
) -> set[tuple[int, int]]:
    """Degree-preserving randomization by double edge swaps.

    (a,b),(c,d) -> (a,d),(c,b).  A swap is applied only when it keeps the
    graph simple and produces no edge in ``forbidden`` (a set of normalized
    pairs, used to keep bipartite constructions bipartite).
    """
    edge_list = sorted(edges)
    present = set(edge_list)
    for _ in range(rounds):
        i, j = rng.randrange(len(edge_list)), rng.randrange(len(edge_list))
        if i == j:
            continue
        a, b = edge_list[i]
        c, d = edge_list[j]
        if rng.random() < 0.5:
            a, b = b, a
        new1, new2 = (a, d), (c, b)
        if a == d or c == b:
            continue
        new1, new2 = normalize_edge(*new1), normalize_edge(*new2)
        if new1 == new2 or new1 in present or new2 in present:
            continue
        if new1 in forbidden or new2 in forbidden:
            continue
        present.discard(edge_list[i])
        present.discard(edge_list[j])
        present.add(new1)
        present.add(new2)
        edge_list[i], edge_list[j] = new1, new2
    return present


def gen_figure2(n: int, k: int, seed: int = 0) -> Graph:
    """Two-layer host: a layer L of 5n/9 vertices carrying an internal
    regular graph plus edges to S, and a layer S of 4n/9 vertices with no
    internal edges.

    Target degrees: within L 0.7k, from L into S 0.4k, from S into L 0.5k
    (so L-vertices have total degree 1.1k and S-vertices 0.5k).  Each is
    rounded to the nearest feasible integer; realized values are recorded
    in ``meta``.  Deterministic for a fixed seed; seed 0 keeps the plain
    cyclic construction with no randomizing swaps.
    """
    if n % 9 != 0 or n <= 0:
        raise GraphError(f"infeasible: n={n} not divisible by 9")
    size_l = 5 * n // 9
    size_s = 4 * n // 9
    d_ll = round(0.7 * k)
    d_ls = round(0.4 * k)
    d_sl = round(0.5 * k)
    if (d_ll * size_l) % 2 != 0:
        d_ll -= 1
    if d_ll <= 0 or d_ls <= 0 or d_sl <= 0:
        raise GraphError(f"infeasible: degenerate degrees for k={k}")
    if d_ll >= size_l or d_ls > size_s or d_sl > size_l:
        raise GraphError(f"infeasible: degrees exceed layer sizes (n={n}, k={k})")
    if size_l * d_ls != size_s * d_sl:
        raise GraphError(
            f"infeasible: cross-stub mismatch {size_l}*{d_ls} != {size_s}*{d_sl}"
        )
    layer_l = list(range(size_l))
    layer_s = list(range(size_l, size_l + size_s))
    ll_edges = _regular_circulant_edges(layer_l, d_ll)
    ls_edges = _biregular_edges(layer_l, layer_s, d_ls, d_sl)
    if seed != 0:
        rng = random.Random(seed)
        set_l = set(layer_l)
        # forbid L-L pairs inside the cross construction and S-S / L-S pairs
        # inside the internal one; swaps stay within their block
        ll_edges = _edge_swap_shuffle(
            ll_edges,
            forbidden=set(),
            rng=rng,
            rounds=4 * len(ll_edges),
        )
        forbidden_cross = {normalize_edge(u, v) for u, v in ll_edges}
        ls_edges = {
            e
            for e in _edge_swap_shuffle(
                ls_edges,
                forbidden={
                    normalize_edge(u, v)
                    for u in layer_l
                    for v in layer_l
                    if u < v
                } | forbidden_cross,
                rng=rng,
                rounds=4 * len(ls_edges),
            )
        }
        # keep bipartiteness: swaps above may only have produced L-S pairs
        for u, v in ls_edges:
            if (u in set_l) == (v in set_l):
                raise GraphError("infeasible: shuffle broke biregularity")
    meta = {
        "layer_l": layer_l,
        "layer_s": layer_s,
        "deg_ll": d_ll,
        "deg_ls": d_ls,
        "deg_sl": d_sl,
        "k": k,
        "seed": seed,
    }
    return Graph(n, ll_edges | ls_edges, meta=meta)


def _prufer_decode(seq: Sequence[int], n: int) -> list[tuple[int, int]]:
    """Decode a length n-2 sequence over 0..n-1 into the edges of the
    corresponding labeled tree (bijective for n >= 2)."""
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    # leaves kept in a heap-free manner: smallest current leaf via pointer scan
    import heapq

    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return edges


TREE_KINDS = ("path", "star", "caterpillar", "broom", "random")


def gen_tree(kind: str, k: int, seed: int = 0) -> RootedTree:
    """Tree with exactly k edges; ``random`` is uniform over labeled trees."""
    if k <= 0:
        raise GraphError(f"bad-order: k must be >= 1, got {k}")
    n = k + 1
    if kind == "path":
        parent: list[int | None] = [None] + list(range(n - 1))
        return RootedTree(n, parent, 0)
    if kind == "star":
        return RootedTree(n, [None] + [0] * (n - 1), 0)
    if kind == "caterpillar":
        rng = random.Random(seed)
        spine = max(2, (k + 2) // 2) if n >= 2 else 1
        spine = min(spine, n)
        parent = [None] + [i for i in range(spine - 1)]
        for v in range(spine, n):
            parent.append(rng.randrange(spine))
        return RootedTree(n, parent, 0)
    if kind == "broom":
        handle = max(1, k // 2)
        parent = [None] + list(range(handle))
        parent.extend([handle] * (k - handle))
        return RootedTree(n, parent, 0)
    if kind == "random":
        if n == 1:
            return RootedTree(1, [None], 0)
        if n == 2:
            return RootedTree(2, [None, 0], 0)
        rng = random.Random(seed)
        seq = [rng.randrange(n) for _ in range(n - 2)]
        return RootedTree.from_edges(n, _prufer_decode(seq, n), root=0)
    raise GraphError(f"bad-kind: {kind!r} not in {TREE_KINDS}")


# ---------------------------------------------------------------------------
# degree census
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DegreeCensus:
    count_big: int
    satisfies: bool
    threshold: int
    required: Fraction


def lks_degree_census(g: Graph, k: int, eps) -> DegreeCensus:
    """Count vertices of degree >= ceil((1+eps)k) and compare the count
    against (1+eps)n/2."""
    eps = as_fraction(eps)
    thr_frac = (1 + eps) * k
    threshold = int(thr_frac) if thr_frac.denominator == 1 else int(thr_frac) + 1
    count = sum(1 for v in range(g.n) if g.degree(v) >= threshold)
    required = (1 + eps) * Fraction(g.n, 2)
    return DegreeCensus(count, Fraction(count) >= required, threshold, required)
