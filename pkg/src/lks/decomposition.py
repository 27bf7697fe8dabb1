"""Sparse decomposition pipeline.

Splits a host graph into four parts, tracking every lost edge in a ledger:

  psi     vertices of huge degree (above a gap in the degree sequence),
  spots   a searcher-maximal family of edge-disjoint dense bipartite spots,
  g_exp   what is left after removing spot edges, pruned to minimum degree
          rho*k and certified spot-free ("nowhere dense"),
  small cells   the union of small overlap cells of the spot sides; the
          large cells are chopped into clusters and regularized.

Edge conservation is exact:  |E| = gap-deleted + psi-incident + spot
+ expander-peeled + g_exp edges.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .graphs import (
    BipartitePair,
    Graph,
    GraphError,
    as_fraction,
    density,
    min_degree_across,
    normalize_edge,
)
from .regularity import (
    EXACT_SIDE_BUDGET,
    Partition,
    RegularityVerdict,
    check_regular_pair,
)
from .vizing import edge_coloring


# ---------------------------------------------------------------------------
# constants schedule
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantSchedule:
    """The coupled constants driving the pipeline, as exact rationals.

    Validated relations: 0 < tau; tau + gamma^2 <= gamma; 5 tau <= beta;
    5 beta <= gamma; 3 gamma <= rho; 2 rho <= eps; alpha <= eta/5;
    omega_star < omega_prime < omega_star_star.
    """

    eps: Fraction = Fraction(3, 10)
    tau: Fraction = Fraction(1, 500)
    beta: Fraction = Fraction(1, 100)
    gamma: Fraction = Fraction(1, 20)
    rho: Fraction = Fraction(3, 20)
    eta: Fraction = Fraction(1, 5)
    alpha: Fraction = Fraction(1, 25)
    nu: Fraction = Fraction(1, 10)
    mu: Fraction = Fraction(1, 10)
    lam: Fraction = Fraction(1, 20)
    big_lambda: Fraction = Fraction(10)
    omega_star: Fraction = Fraction(4)
    omega_prime: Fraction = Fraction(8)
    omega_star_star: Fraction = Fraction(16)

    def __post_init__(self):
        for name in (
            "eps", "tau", "beta", "gamma", "rho", "eta", "alpha", "nu", "mu",
            "lam", "big_lambda", "omega_star", "omega_prime", "omega_star_star",
        ):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        checks = [
            (self.tau > 0, "tau must be positive"),
            (self.tau + self.gamma ** 2 <= self.gamma, "tau + gamma^2 <= gamma"),
            (5 * self.tau <= self.beta, "5*tau <= beta"),
            (5 * self.beta <= self.gamma, "5*beta <= gamma"),
            (3 * self.gamma <= self.rho, "3*gamma <= rho"),
            (2 * self.rho <= self.eps, "2*rho <= eps"),
            (self.alpha <= self.eta / 5, "alpha <= eta/5"),
            (self.omega_star < self.omega_prime < self.omega_star_star,
             "omega_star < omega_prime < omega_star_star"),
        ]
        for ok, msg in checks:
            if not ok:
                raise GraphError(f"schedule-invariant: {msg}")

    def with_overrides(self, **kwargs) -> "ConstantSchedule":
        return replace(self, **{k: as_fraction(v) for k, v in kwargs.items()})

    def to_json_dict(self) -> dict:
        return {
            name: str(getattr(self, name))
            for name in (
                "eps", "tau", "beta", "gamma", "rho", "eta", "alpha", "nu",
                "mu", "lam", "big_lambda", "omega_star", "omega_prime",
                "omega_star_star",
            )
        }


# ---------------------------------------------------------------------------
# degree gap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DegreeGapResult:
    g_prime: Graph
    psi: frozenset[int]
    omega_star: Fraction
    omega_star_star: Fraction
    band_index: int
    deleted: frozenset[tuple[int, int]]
    band_mass: int
    rounds: int


def find_degree_gap(g: Graph, k: int, sched: ConstantSchedule) -> DegreeGapResult:
    """Create a gap [omega*k, omega**k) in the degree sequence.

    Bands are [4^i k, 4^{i+1} k) for i = 1..B with B = ceil(1/eps)+1 (the
    last band is unbounded above).  The band of smallest total degree is
    wiped: all edges at its vertices are deleted.  Since deletions can drop
    other degrees into the band, the wipe is iterated to a fixpoint, capped
    at B rounds.  psi is everything still at or above omega**k.
    """
    if k < 1:
        raise GraphError(f"bad-order: k={k}")
    inv = Fraction(1) / sched.eps
    bands = int(inv) + (0 if inv.denominator == 1 else 1) + 1

    def band_of(deg: int) -> int | None:
        for i in range(1, bands + 1):
            lo = Fraction(4 ** i) * k
            hi = Fraction(4 ** (i + 1)) * k if i < bands else None
            if deg >= lo and (hi is None or deg < hi):
                return i
        return None

    mass = [0] * (bands + 1)
    for v in g.vertices():
        b = band_of(g.degree(v))
        if b is not None:
            mass[b] += g.degree(v)
    band = min(range(1, bands + 1), key=lambda i: (mass[i], i))
    limit = sched.eps * k * g.n
    if mass[band] > limit:
        raise GraphError(
            f"gap-infeasible: lightest band carries degree {mass[band]} > eps*k*n = {limit}"
        )
    omega_star = Fraction(4 ** band)
    omega_star_star = Fraction(4 ** (band + 1))

    h = g
    deleted: set[tuple[int, int]] = set()
    rounds = 0
    for _ in range(bands):
        victims = [
            v
            for v in h.vertices()
            if omega_star * k <= h.degree(v) < omega_star_star * k
        ]
        if not victims:
            break
        rounds += 1
        vs = set(victims)
        for u, w in h.edges:
            if u in vs or w in vs:
                deleted.add((u, w))
        h = h.without_vertex_edges(vs)
    else:
        still = [
            v
            for v in h.vertices()
            if omega_star * k <= h.degree(v) < omega_star_star * k
        ]
        if still:
            raise GraphError(
                f"gap-repair-diverged: {len(still)} vertices still in band after {bands} rounds"
            )
    if len(deleted) > 2 * sched.eps * k * g.n:
        raise GraphError(
            f"gap-repair-diverged: deleted {len(deleted)} edges > 2*eps*k*n"
        )
    psi = frozenset(v for v in h.vertices() if h.degree(v) >= omega_star_star * k)
    return DegreeGapResult(
        h, psi, omega_star, omega_star_star, band, frozenset(deleted), mass[band], rounds
    )


# ---------------------------------------------------------------------------
# dense spots
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DenseSpot:
    pair: BipartitePair
    edges: frozenset[tuple[int, int]]

    @property
    def side_a(self) -> frozenset[int]:
        return self.pair.side_a

    @property
    def side_b(self) -> frozenset[int]:
        return self.pair.side_b

    def vertex_set(self) -> frozenset[int]:
        return self.pair.side_a | self.pair.side_b

    def is_valid(self, m, gamma) -> bool:
        return density(self.pair) > as_fraction(gamma) and min_degree_across(
            self.pair
        ) > as_fraction(m)


def _make_spot(n: int, side_a, side_b, cross: set[tuple[int, int]]) -> DenseSpot:
    host = Graph(n, cross)
    return DenseSpot(
        BipartitePair(frozenset(side_a), frozenset(side_b), host), frozenset(cross)
    )


def _peel_to_spot(g: Graph, u0, w0, m: Fraction, gamma: Fraction) -> DenseSpot | None:
    """Alternating peel: repeatedly drop the vertex of minimum cross-degree
    until both the min-degree and density thresholds hold, or a side dies."""
    u = set(u0)
    w = set(w0)
    u -= w
    if not u or not w:
        return None
    deg: dict[int, int] = {}
    for x in u:
        deg[x] = g.deg_into(x, w)
    for y in w:
        deg[y] = g.deg_into(y, u)
    e = sum(deg[x] for x in u)
    while u and w:
        if e == 0:
            return None
        dmin = min(deg.values())
        if dmin > m and Fraction(e, len(u) * len(w)) > gamma:
            cross = g.cross_edges(u, w)
            return _make_spot(g.n, u, w, set(cross))
        victim = min(x for x in deg if deg[x] == dmin)
        own = u if victim in u else w
        other = w if victim in u else u
        own.discard(victim)
        e -= deg.pop(victim)
        for y in g.nbr_set(victim):
            if y in other:
                deg[y] -= 1
    return None


def find_dense_spot(g: Graph, m, gamma, split_tries: int = 2) -> DenseSpot | None:
    """Search for one (m, gamma)-dense spot.

    Seeds are tried from the highest-degree vertex down.  Per seed the
    initial sides are (N(v), N^2(v) - N(v)) plus a few deterministic random
    splits of {v} + N(v); each initialization is peeled by minimum
    cross-degree.  Heuristic: a None result means the searcher found
    nothing, not that no spot exists.
    """
    m = as_fraction(m)
    gamma = as_fraction(gamma)
    order = sorted((v for v in g.vertices() if g.degree(v) > 0),
                   key=lambda v: (-g.degree(v), v))
    for v in order:
        nv = set(g.nbr_set(v))
        second = set()
        for x in nv:
            second |= g.nbr_set(x)
        second -= nv
        spot = _peel_to_spot(g, nv, second, m, gamma)
        if spot is not None:
            return spot
        ball = sorted(nv | {v})
        for attempt in range(split_tries):
            rng = random.Random(1_000_003 * v + attempt)
            left = {x for x in ball if rng.random() < 0.5}
            right = set(ball) - left
            spot = _peel_to_spot(g, left, right, m, gamma)
            if spot is not None:
                return spot
    return None


def extract_dense_spots(g: Graph, k: int, gamma) -> list[DenseSpot]:
    """Greedy searcher-maximal family of edge-disjoint (gamma*k, gamma)-dense
    spots.  Expects a graph already stripped of psi-incident edges."""
    gamma = as_fraction(gamma)
    m = gamma * k
    spots: list[DenseSpot] = []
    residual = g
    while True:
        spot = find_dense_spot(residual, m, gamma)
        if spot is None:
            return spots
        spots.append(spot)
        residual = residual.without_edges(spot.edges)


def has_dense_spot_exact(
    g: Graph, m, gamma, side_budget: int = EXACT_SIDE_BUDGET
) -> tuple[bool, tuple[frozenset[int], frozenset[int]] | None]:
    """Exhaustively decide whether g contains an (m, gamma)-dense spot.

    Only the side pairs (U, W) with all cross edges need checking, since
    taking every cross edge maximizes both the density and the minimum
    degree.  Feasible for hosts of up to ~14 non-trivial vertices.
    """
    m = as_fraction(m)
    gamma = as_fraction(gamma)
    active = [v for v in g.vertices() if g.degree(v) > m]
    # vertices below the degree floor can never sit in a spot; iterate
    while True:
        aset = set(active)
        keep = [v for v in active if g.deg_into(v, aset) > m]
        if len(keep) == len(active):
            break
        active = keep
    if not active:
        return False, None
    if len(active) > side_budget:
        raise GraphError(
            f"exact-budget: {len(active)} active vertices exceed {side_budget}"
        )
    na = len(active)
    idx = {v: i for i, v in enumerate(active)}
    rows = [0] * na
    for i, v in enumerate(active):
        for u in g.nbr_set(v):
            if u in idx:
                rows[i] |= 1 << idx[u]

    def search(u_mask: int) -> frozenset[int] | None:
        u_list = [i for i in range(na) if u_mask >> i & 1]
        mu = u_list[0]
        cand = [
            j
            for j in range(mu + 1, na)
            if not (u_mask >> j & 1) and (rows[j] & u_mask).bit_count() > m
        ]
        if not cand:
            return None
        cand_mask_all = 0
        for j in cand:
            cand_mask_all |= 1 << j
        # a U vertex that cannot reach min degree even with all candidates
        # rules the whole U out
        for i in u_list:
            if (rows[i] & cand_mask_all).bit_count() <= m:
                return None
        wdeg = {j: (rows[j] & u_mask).bit_count() for j in cand}
        best: frozenset[int] | None = None

        def rec(pos: int, w_mask: int, w_size: int, e: int):
            nonlocal best
            if best is not None:
                return
            if w_size:
                ok = all((rows[i] & w_mask).bit_count() > m for i in u_list)
                if ok and Fraction(e, len(u_list) * w_size) > gamma:
                    best = frozenset(active[j] for j in cand if w_mask >> j & 1)
                    return
            if pos == len(cand):
                return
            rest_mask = 0
            for j in cand[pos:]:
                rest_mask |= 1 << j
            for i in u_list:
                if (rows[i] & (w_mask | rest_mask)).bit_count() <= m:
                    return
            j = cand[pos]
            rec(pos + 1, w_mask | (1 << j), w_size + 1, e + wdeg[j])
            rec(pos + 1, w_mask, w_size, e)

        rec(0, 0, 0, 0)
        return best

    for u_mask in range(1, 1 << na):
        w = search(u_mask)
        if w is not None:
            u = frozenset(active[i] for i in range(na) if u_mask >> i & 1)
            return True, (u, w)
    return False, None


# ---------------------------------------------------------------------------
# expander
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpanderResult:
    graph: Graph
    vertices: frozenset[int]
    removed: tuple[int, ...]
    deleted_edges: int
    extra_spots: tuple[DenseSpot, ...]


def build_expander(g: Graph, spots: list[DenseSpot], k: int, rho, gamma) -> ExpanderResult:
    """Strip spot edges, then peel vertices of degree < rho*k (smallest id
    first) until the minimum degree holds.  The result is re-searched for
    dense spots; any find is added to extra_spots and the peel repeats, so
    the returned graph is always searcher-certified nowhere-dense."""
    rho = as_fraction(rho)
    gamma = as_fraction(gamma)
    threshold = rho * k
    spot_edges = set()
    for s in spots:
        spot_edges |= s.edges
    h = g.without_edges(spot_edges)
    removed: list[int] = []
    deleted = 0
    extra: list[DenseSpot] = []
    gone: set[int] = set()
    while True:
        # peel to the minimum-degree core
        degs = {v: h.degree(v) for v in h.vertices() if v not in gone}
        pending = sorted(v for v, d in degs.items() if d < threshold)
        while pending:
            v = pending.pop(0)
            if v in gone or degs[v] >= threshold:
                continue
            gone.add(v)
            removed.append(v)
            deleted += degs[v]
            changed = []
            for u in h.nbr_set(v):
                if u not in gone:
                    degs[u] -= 1
                    if degs[u] < threshold:
                        changed.append(u)
            if changed:
                pending = sorted(set(pending) | set(changed))
        survivors = {v for v in h.vertices() if v not in gone and h.degree(v) > 0}
        core_edges = [e for e in h.edges if e[0] not in gone and e[1] not in gone]
        core = Graph(h.n, core_edges)
        spot = find_dense_spot(core, gamma * k, gamma)
        if spot is None:
            if deleted >= rho * k * g.n and g.n > 0:
                raise GraphError(f"expander-loss: peeled {deleted} edges >= rho*k*n")
            vertices = frozenset(v for v in survivors if core.degree(v) > 0)
            return ExpanderResult(core, vertices, tuple(removed), deleted, tuple(extra))
        extra.append(spot)
        h = core.without_edges(spot.edges)


# ---------------------------------------------------------------------------
# overlap cells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VennCells:
    cells: tuple[frozenset[int], ...]  # large cells, signature-lex order
    small_cells: frozenset[int]
    signatures: tuple[tuple[int, ...], ...]  # aligned with cells


def venn_cells(g: Graph, spots: list[DenseSpot], alpha, k: int) -> VennCells:
    """Partition the spot vertices by their membership signature over all
    spot sides; cells smaller than alpha*k pool into small_cells."""
    alpha = as_fraction(alpha)
    covered: set[int] = set()
    for s in spots:
        covered |= s.vertex_set()
    sig: dict[int, list[int]] = {v: [0] * len(spots) for v in covered}
    for i, s in enumerate(spots):
        for v in s.side_a:
            sig[v][i] = 1
        for v in s.side_b:
            sig[v][i] = 2
    buckets: dict[tuple[int, ...], set[int]] = {}
    for v, signature in sig.items():
        buckets.setdefault(tuple(signature), set()).add(v)
    small: set[int] = set()
    cells: list[tuple[tuple[int, ...], frozenset[int]]] = []
    for signature in sorted(buckets):
        cell = buckets[signature]
        if len(cell) < alpha * k:
            small |= cell
        else:
            cells.append((signature, frozenset(cell)))
    return VennCells(
        cells=tuple(c for _, c in cells),
        small_cells=frozenset(small),
        signatures=tuple(s for s, _ in cells),
    )


@dataclass(frozen=True)
class CellGraphResult:
    cell_graph: Graph
    matchings: tuple[frozenset[tuple[int, int]], ...]


def build_cell_graph(cells, spots: list[DenseSpot]) -> CellGraphResult:
    """Join two large cells when some spot has one inside each side, then
    split the edges into at most Delta+1 matchings."""
    cells = list(cells)
    reps = [min(c) if c else -1 for c in cells]
    edges = set()
    for s in spots:
        ins_a = [i for i, r in enumerate(reps) if r in s.side_a]
        ins_b = [i for i, r in enumerate(reps) if r in s.side_b]
        # a cell is inside a side iff its representative is (cells are
        # atoms of the side family)
        for i in ins_a:
            if not cells[i] <= s.side_a:
                continue
            for j in ins_b:
                if cells[j] <= s.side_b:
                    edges.add(normalize_edge(i, j))
    cg = Graph(len(cells), edges)
    matchings = tuple(frozenset(mc) for mc in edge_coloring(cg))
    return CellGraphResult(cg, matchings)


# ---------------------------------------------------------------------------
# regularization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegularPair:
    cluster_a: frozenset[int]
    cluster_b: frozenset[int]
    density: Fraction
    verdict: RegularityVerdict
    matching_index: int

    def vertex_set(self) -> frozenset[int]:
        return self.cluster_a | self.cluster_b

    def to_json_dict(self) -> dict:
        return {
            "cluster_a": sorted(self.cluster_a),
            "cluster_b": sorted(self.cluster_b),
            "density": str(self.density),
            "regular": self.verdict.regular,
            "method": self.verdict.method,
            "matching": self.matching_index,
        }


@dataclass
class RegularizeResult:
    pairs: list[RegularPair]
    partition: Partition
    rounds: int
    energies: list[list[Fraction]]  # per matching, per round
    irregular_fractions: list[Fraction]
    converged: bool


def _pair_energy(g: Graph, a: frozenset[int], b: frozenset[int]) -> Fraction:
    e = sum(g.deg_into(v, b) for v in a)
    if not e:
        return Fraction(0)
    return Fraction(e * e, g.n * g.n * len(a) * len(b))


def regularize_cells(
    g: Graph,
    cells,
    matchings,
    sched: ConstantSchedule,
    budget: int = 10,
    k: int | None = None,
) -> RegularizeResult:
    """Simultaneously regularize the cluster pairs induced by each matching.

    Large cells are first chopped into clusters of size floor(nu*k)
    (leftovers to the exceptional set).  Each round tests every cluster
    pair lying on a matching edge for eta-regularity (exact when the sides
    fit the exact budget, sampled otherwise) and applies one common
    refinement with all collected witnesses.  One mean-square energy is
    tracked per matching; refinement splits whole classes only, so each is
    nondecreasing.  Stops when every matching has at most an eta fraction
    of irregular pairs, or after ``budget`` rounds (converged=False)."""
    if k is None:
        raise GraphError("bad-order: regularize_cells needs k")
    cluster_size = max(1, int(sched.nu * k))
    clusters: list[frozenset[int]] = []
    cluster_cell: list[int] = []
    exceptional: set[int] = set()
    for ci, cell in enumerate(cells):
        ids = sorted(cell)
        nfull = len(ids) // cluster_size
        for j in range(nfull):
            clusters.append(frozenset(ids[j * cluster_size : (j + 1) * cluster_size]))
            cluster_cell.append(ci)
        exceptional |= set(ids[nfull * cluster_size :])
    partition = Partition(tuple(clusters), frozenset(exceptional))

    def clusters_of_cell() -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for idx, cls in enumerate(partition.classes):
            rep = min(cls)
            for ci, cell in enumerate(cells):
                if rep in cell:
                    out.setdefault(ci, []).append(idx)
                    break
        return out

    def matching_pairs(by_cell: dict[int, list[int]]):
        out: list[list[tuple[int, int]]] = []
        for m in matchings:
            pairs = []
            for x, y in sorted(m):
                for i in by_cell.get(x, []):
                    for j in by_cell.get(y, []):
                        pairs.append((i, j))
            out.append(pairs)
        return out

    energies: list[list[Fraction]] = [[] for _ in matchings]
    fractions: list[Fraction] = [Fraction(0)] * len(matchings)
    rounds = 0
    converged = True
    while True:
        by_cell = clusters_of_cell()
        per_matching = matching_pairs(by_cell)
        witnesses = []
        all_ok = True
        for mi, pairs in enumerate(per_matching):
            bad = 0
            energy_m = Fraction(0)
            for i, j in pairs:
                a, b = partition.classes[i], partition.classes[j]
                energy_m += _pair_energy(g, a, b)
                verdict = _test_pair(g, a, b, sched.eta, seed=rounds * 7919 + i * 13 + j)
                if not verdict.regular:
                    bad += 1
                    if verdict.witness is not None:
                        witnesses.append(((i, j), verdict.witness[0], verdict.witness[1]))
            energies[mi].append(energy_m)
            fractions[mi] = Fraction(bad, len(pairs)) if pairs else Fraction(0)
            if fractions[mi] > sched.eta:
                all_ok = False
        if all_ok:
            break
        if rounds >= budget or not witnesses:
            converged = False
            break
        from .regularity import refine_by_witnesses

        partition = refine_by_witnesses(partition, witnesses, min_class_size=1)
        rounds += 1

    by_cell = clusters_of_cell()
    per_matching = matching_pairs(by_cell)
    final_pairs: list[RegularPair] = []
    for mi, pairs in enumerate(per_matching):
        for i, j in pairs:
            a, b = partition.classes[i], partition.classes[j]
            e = sum(g.deg_into(v, b) for v in a)
            if e == 0:
                continue
            verdict = _test_pair(g, a, b, sched.eta, seed=10_000_019 + i * 13 + j)
            if verdict.regular:
                final_pairs.append(
                    RegularPair(a, b, Fraction(e, len(a) * len(b)), verdict, mi)
                )
    return RegularizeResult(final_pairs, partition, rounds, energies, fractions, converged)


def _test_pair(g: Graph, a, b, eta, seed: int) -> RegularityVerdict:
    pair = BipartitePair(a, b, g)
    if len(a) <= EXACT_SIDE_BUDGET and len(b) <= EXACT_SIDE_BUDGET:
        return check_regular_pair(pair, eta, mode="exact")
    return check_regular_pair(pair, eta, mode="sampled", samples=300, seed=seed)


# ---------------------------------------------------------------------------
# avoiding property
# ---------------------------------------------------------------------------


@dataclass
class AvoidingReport:
    passed: bool
    counts: list[int]
    bound: Fraction
    witnesses: list[tuple[int, ...]]  # exceptional vertices per X (truncated)

    def to_json(self) -> str:
        return json.dumps(
            {
                "pass": self.passed,
                "counts": self.counts,
                "bound": str(self.bound),
                "witnesses": [list(w) for w in self.witnesses],
            }
        )


def check_avoiding(
    g: Graph,
    spots: list[DenseSpot],
    small_cells,
    x_sets,
    sched: ConstantSchedule,
    k: int,
) -> AvoidingReport:
    """For each probe set X, count small-cell vertices having no containing
    spot D with |X & V(D)| <= gamma^2 k; pass iff every count <= beta*k."""
    small = frozenset(small_cells)
    spots_of: dict[int, list[frozenset[int]]] = {v: [] for v in small}
    for s in spots:
        for v in s.vertex_set():
            if v in small:
                spots_of[v].append(s.vertex_set())
    g2k = sched.gamma ** 2 * k
    bound = sched.beta * k
    counts = []
    witnesses = []
    for x in x_sets:
        x = frozenset(x)
        if len(x) > sched.big_lambda * k:
            raise GraphError(
                f"Lambda-violation: |X|={len(x)} > Lambda*k = {sched.big_lambda * k}"
            )
        exceptional = [
            v
            for v in sorted(small)
            if not any(len(x & vd) <= g2k for vd in spots_of[v])
        ]
        counts.append(len(exceptional))
        witnesses.append(tuple(exceptional[:5]))
    return AvoidingReport(
        passed=all(c <= bound for c in counts), counts=counts, bound=bound,
        witnesses=witnesses,
    )


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


@dataclass
class SparseDecomposition:
    k: int
    schedule: ConstantSchedule
    g_prime: Graph
    psi: frozenset[int]
    spots: list[DenseSpot]
    g_exp: Graph
    g_exp_vertices: frozenset[int]
    cells: tuple[frozenset[int], ...]
    small_cells: frozenset[int]
    cell_graph: Graph
    matchings: tuple[frozenset[tuple[int, int]], ...]
    g_reg: list[RegularPair]
    regularize: RegularizeResult | None
    ledger: dict = field(default_factory=dict)

    def spot_union_vertices(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.spots:
            out |= s.vertex_set()
        return frozenset(out)

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "schedule": self.schedule.to_json_dict(),
            "psi": sorted(self.psi),
            "spots": [
                {
                    "side_a": sorted(s.side_a),
                    "side_b": sorted(s.side_b),
                    "edges": sorted(list(e) for e in s.edges),
                }
                for s in self.spots
            ],
            "g_exp": {"vertices": sorted(self.g_exp_vertices),
                      "edges": sorted(list(e) for e in self.g_exp.edges)},
            "cells": [sorted(c) for c in self.cells],
            "small_cells": sorted(self.small_cells),
            "cell_graph": sorted(list(e) for e in self.cell_graph.edges),
            "matchings": [sorted(list(e) for e in m) for m in self.matchings],
            "g_reg": [p.to_json_dict() for p in self.g_reg],
            "ledger": {k2: (v if not isinstance(v, Fraction) else str(v))
                       for k2, v in self.ledger.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def cell_graph_dot(self) -> str:
        color_of = {}
        for mi, m in enumerate(self.matchings):
            for e in m:
                color_of[e] = mi
        lines = ["graph cells {"]
        for i, cell in enumerate(self.cells):
            lines.append(f'  {i} [label="cell{i} ({len(cell)})"];')
        for u, v in sorted(self.cell_graph.edges):
            lines.append(f'  {u} -- {v} [label="M{color_of[(u, v)]}"];')
        lines.append("}")
        return "\n".join(lines)


def audit_ledger(g: Graph, d: SparseDecomposition) -> dict:
    """Recompute the edge accounting from the parts; raises on mismatch."""
    spot_edges = sum(len(s.edges) for s in d.spots)
    total = (
        d.ledger["gap_deleted"]
        + d.ledger["psi_incident"]
        + spot_edges
        + d.ledger["expander_peeled"]
        + d.g_exp.m
    )
    if total != g.m:
        raise GraphError(
            f"ledger-mismatch: {total} accounted vs {g.m} edges in the host"
        )
    return {"accounted": total, "host_edges": g.m}


def decompose(
    g: Graph, k: int, sched: ConstantSchedule | None = None, budget: int = 10
) -> SparseDecomposition:
    """Run the full pipeline: degree gap, dense spots, expander, overlap
    cells, cell graph + matchings, regularization.  The ledger itemizes
    every removed edge and the total loss is bounded by (2 eps + rho) k n."""
    sched = sched or ConstantSchedule()
    gap = find_degree_gap(g, k, sched)
    sched = sched.with_overrides(
        omega_star=gap.omega_star,
        omega_prime=2 * gap.omega_star,
        omega_star_star=gap.omega_star_star,
    )
    psi_incident = frozenset(
        e for e in gap.g_prime.edges if e[0] in gap.psi or e[1] in gap.psi
    )
    residual = gap.g_prime.without_vertex_edges(gap.psi)
    spots = extract_dense_spots(residual, k, sched.gamma)
    exp = build_expander(residual, spots, k, sched.rho, sched.gamma)
    spots = spots + list(exp.extra_spots)
    cells = venn_cells(g, spots, sched.alpha, k)
    cellres = build_cell_graph(cells.cells, spots)
    spot_edge_union = set()
    for s in spots:
        spot_edge_union |= s.edges
    g_spots = Graph(g.n, spot_edge_union)
    regres = regularize_cells(g_spots, cells.cells, cellres.matchings, sched,
                              budget=budget, k=k)
    ledger = {
        "host_edges": g.m,
        "gap_deleted": len(gap.deleted),
        "gap_band": gap.band_index,
        "gap_band_mass": gap.band_mass,
        "psi_incident": len(psi_incident),
        "spot_edges": len(spot_edge_union),
        "spot_count": len(spots),
        "expander_peeled": exp.deleted_edges,
        "g_exp_edges": exp.graph.m,
        "deleted_total": len(gap.deleted) + exp.deleted_edges,
        "loss_bound": (2 * sched.eps + sched.rho) * k * g.n,
    }
    if ledger["deleted_total"] > (2 * sched.eps + sched.rho) * k * g.n:
        raise GraphError(
            f"ledger-bound: deleted {ledger['deleted_total']} > (2eps+rho)kn"
        )
    decomp = SparseDecomposition(
        k=k,
        schedule=sched,
        g_prime=gap.g_prime,
        psi=gap.psi,
        spots=spots,
        g_exp=exp.graph,
        g_exp_vertices=exp.vertices,
        cells=cells.cells,
        small_cells=cells.small_cells,
        cell_graph=cellres.cell_graph,
        matchings=cellres.matchings,
        g_reg=regres.pairs,
        regularize=regres,
        ledger=ledger,
    )
    audit_ledger(g, decomp)
    return decomp


def figure2_cover_decomposition(fig: Graph, sched: ConstantSchedule, k: int) -> SparseDecomposition:
    """Hand-built decomposition for a gen_figure2 host in which the dense
    spots cover every edge.

    L-vertices sharing an identical S-neighborhood become one complete
    bipartite block spot; leftover L-vertices get a star spot onto their
    S-neighborhood; every L-L edge becomes a single-edge spot.  With the
    unshuffled (seed 0) generator the blocks shatter L into singleton
    cells while the S-side cells stay large, so the small cells cover
    exactly the high-degree layer and the cell graph is edgeless."""
    if fig.meta is None or "layer_l" not in fig.meta:
        raise GraphError("bad-host: needs a gen_figure2 graph with metadata")
    layer_l = list(fig.meta["layer_l"])
    set_l = set(layer_l)
    groups: dict[frozenset[int], list[int]] = {}
    for v in layer_l:
        s_nbrs = frozenset(u for u in fig.nbr_set(v) if u not in set_l)
        if s_nbrs:
            groups.setdefault(s_nbrs, []).append(v)
    spots: list[DenseSpot] = []
    for s_nbrs in sorted(groups, key=lambda fs: sorted(fs)):
        members = groups[s_nbrs]
        complete = all(s_nbrs <= fig.nbr_set(v) for v in members)
        if complete and len(members) >= 2:
            cross = {(min(u, w), max(u, w)) for u in members for w in s_nbrs}
            spots.append(_make_spot(fig.n, members, s_nbrs, cross))
        else:
            for v in members:
                cross = {normalize_edge(v, w) for w in s_nbrs}
                spots.append(_make_spot(fig.n, [v], s_nbrs, cross))
    for u, w in sorted(fig.edges):
        if u in set_l and w in set_l:
            spots.append(_make_spot(fig.n, [u], [w], {normalize_edge(u, w)}))
    m = sched.gamma * k
    for s in spots:
        if not s.is_valid(m, sched.gamma):
            raise GraphError("bad-spot: hand-built spot fails its thresholds")
    covered = set()
    for s in spots:
        if covered & s.edges:
            raise GraphError("bad-spot: hand-built spots overlap in edges")
        covered |= s.edges
    if covered != fig.edges:
        raise GraphError("bad-spot: hand-built spots do not cover the host")
    cells = venn_cells(fig, spots, sched.alpha, k)
    cellres = build_cell_graph(cells.cells, spots)
    regres = regularize_cells(fig, cells.cells, cellres.matchings, sched,
                              budget=5, k=k)
    empty = Graph(fig.n, [])
    ledger = {
        "host_edges": fig.m,
        "gap_deleted": 0,
        "gap_band": 0,
        "gap_band_mass": 0,
        "psi_incident": 0,
        "spot_edges": len(covered),
        "spot_count": len(spots),
        "expander_peeled": 0,
        "g_exp_edges": 0,
        "deleted_total": 0,
        "loss_bound": (2 * sched.eps + sched.rho) * k * fig.n,
    }
    decomp = SparseDecomposition(
        k=k,
        schedule=sched,
        g_prime=fig,
        psi=frozenset(),
        spots=spots,
        g_exp=empty,
        g_exp_vertices=frozenset(),
        cells=cells.cells,
        small_cells=cells.small_cells,
        cell_graph=cellres.cell_graph,
        matchings=cellres.matchings,
        g_reg=regres.pairs,
        regularize=regres,
        ledger=ledger,
    )
    audit_ledger(fig, decomp)
    return decomp
