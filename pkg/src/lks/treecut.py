"""Separator-based tree partition.

``partition_tree`` splits a k-edge tree into a small cut set
``W = W_A | W_B`` and two families of small subtrees so that:

  (a) every subtree has order < tau*k,
  (b) no tree edge joins two distinct subtrees,
  (c) |W| < 100/tau,
  (d) W_A and W_B lie in opposite bipartition classes of the tree,
  (e) every B-family subtree touches exactly one W-vertex, in W_B,
  (f) every A-family subtree touches at most two W-vertices, all in W_A,
  (g) the B-family subtrees together have order < k/2.

``check_partition`` verifies all seven properties independently of how the
partition was produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .graphs import GraphError, RootedTree, as_fraction


@dataclass(frozen=True)
class TreePartition:
    w_a: frozenset[int]
    w_b: frozenset[int]
    trees_a: tuple[frozenset[int], ...]
    trees_b: tuple[frozenset[int], ...]
    # per-subtree (w_vertex, subtree_vertex) tree edges, aligned with trees_*
    attachments_a: tuple[tuple[tuple[int, int], ...], ...]
    attachments_b: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def w(self) -> frozenset[int]:
        return self.w_a | self.w_b

    def internal_flags_a(self) -> tuple[bool, ...]:
        return tuple(len(at) == 2 for at in self.attachments_a)

    def internal_flags_b(self) -> tuple[bool, ...]:
        return tuple(len(at) == 2 for at in self.attachments_b)

    def to_json(self) -> str:
        return json.dumps(
            {
                "w_a": sorted(self.w_a),
                "w_b": sorted(self.w_b),
                "trees_a": [sorted(t) for t in self.trees_a],
                "trees_b": [sorted(t) for t in self.trees_b],
                "attachments": {
                    "a": [[list(e) for e in at] for at in self.attachments_a],
                    "b": [[list(e) for e in at] for at in self.attachments_b],
                },
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "TreePartition":
        doc = json.loads(text)
        return TreePartition(
            w_a=frozenset(doc["w_a"]),
            w_b=frozenset(doc["w_b"]),
            trees_a=tuple(frozenset(t) for t in doc["trees_a"]),
            trees_b=tuple(frozenset(t) for t in doc["trees_b"]),
            attachments_a=tuple(
                tuple((e[0], e[1]) for e in at) for at in doc["attachments"]["a"]
            ),
            attachments_b=tuple(
                tuple((e[0], e[1]) for e in at) for at in doc["attachments"]["b"]
            ),
        )


def _components_of_complement(t: RootedTree, cut: set[int]) -> list[list[int]]:
    """Connected components of T - cut, each sorted, ordered by min vertex."""
    seen = [False] * t.n
    comps: list[list[int]] = []
    for start in range(t.n):
        if seen[start] or start in cut:
            continue
        comp = [start]
        seen[start] = True
        stack = [start]
        while stack:
            v = stack.pop()
            for u in t.neighbors(v):
                if not seen[u] and u not in cut:
                    seen[u] = True
                    comp.append(u)
                    stack.append(u)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def _attachment_edges(t: RootedTree, comp: list[int], cut: set[int]) -> list[tuple[int, int]]:
    """(w, s) tree edges between the cut set and the component, sorted by w."""
    out = []
    for s in comp:
        for u in t.neighbors(s):
            if u in cut:
                out.append((u, s))
    out.sort()
    return out


def partition_tree(t: RootedTree, tau, k: int) -> TreePartition:
    """Cut a k-edge tree into W plus small subtrees satisfying (a)-(g).

    Cut rule, one post-order pass: every vertex accumulates the size of its
    pending branch and the number of already-cut vertices hanging below it
    ("ports").  A vertex joins W as soon as its branch reaches size tau*k
    or collects two ports.  The port rule caps every final subtree at two
    attachments; the size rule caps subtree orders.  Afterwards the two
    bipartition classes are assigned the A/B roles so that the B side
    carries the smaller end-tree volume, and internal subtrees whose two
    attachments disagree with the A class are split by promoting one or two
    of their vertices into W (each promotion only creates compliant pieces,
    so a single sweep suffices).
    """
    tau = as_fraction(tau)
    if not (0 < tau < 1):
        raise GraphError(f"tau-range: tau={tau} not in (0,1)")
    if t.k != k:
        raise GraphError(f"not-a-tree: expected {k} edges, tree has {t.k}")
    if tau * k < 2:
        raise GraphError(f"tau-too-small: tau*k = {tau * k} < 2")

    cut: set[int] = set()
    weight = [0] * t.n
    ports = [0] * t.n
    for v in t.postorder():
        w = 1
        p = 0
        for c in t.children(v):
            if c in cut:
                p += 1
            else:
                w += weight[c]
                p += ports[c]
        if w >= tau * k or p >= 2:
            cut.add(v)
        else:
            weight[v] = w
            ports[v] = p

    comps = _components_of_complement(t, cut)

    def attach_sets(comps_list):
        return [sorted({w for w, _ in _attachment_edges(t, c, cut)}) for c in comps_list]

    attaches = attach_sets(comps)
    # end-tree volume per bipartition class of the single attachment vertex
    vol = [0, 0]
    for comp, att in zip(comps, attaches):
        if len(att) == 1:
            vol[t.color_class(att[0])] += len(comp)
    alpha = 0 if vol[0] >= vol[1] else 1

    # split internal subtrees whose attachment pair is not entirely in the
    # alpha class; the promoted vertices are neighbors of the offending
    # attachment vertices inside the subtree, hence of class alpha
    for _ in range(4 * t.n + 4):
        bad = None
        for comp, att in zip(comps, attaches):
            if len(att) == 2 and any(t.color_class(w) != alpha for w in att):
                bad = (comp, att)
                break
        if bad is None:
            break
        comp, att = bad
        comp_set = set(comp)
        promote = set()
        for w in att:
            if t.color_class(w) != alpha:
                inside = [u for u in t.neighbors(w) if u in comp_set]
                promote.add(inside[0])
        cut |= promote
        comps = _components_of_complement(t, cut)
        attaches = attach_sets(comps)
    else:
        raise GraphError("partition-diverged: internal repair did not settle")

    w_a = frozenset(v for v in cut if t.color_class(v) == alpha)
    w_b = frozenset(v for v in cut if t.color_class(v) != alpha)
    trees_a: list[frozenset[int]] = []
    trees_b: list[frozenset[int]] = []
    att_a: list[tuple[tuple[int, int], ...]] = []
    att_b: list[tuple[tuple[int, int], ...]] = []
    for comp, att in zip(comps, attaches):
        edges = tuple(_attachment_edges(t, comp, cut))
        if len(att) == 1 and t.color_class(att[0]) != alpha:
            trees_b.append(frozenset(comp))
            att_b.append(edges)
        else:
            trees_a.append(frozenset(comp))
            att_a.append(edges)
    return TreePartition(w_a, w_b, tuple(trees_a), tuple(trees_b), tuple(att_a), tuple(att_b))


@dataclass
class PartitionReport:
    passed: bool
    violations: list[tuple[str, str]] = field(default_factory=list)

    def codes(self) -> set[str]:
        return {c for c, _ in self.violations}

    def to_json(self) -> str:
        return json.dumps(
            {"pass": self.passed, "violations": [list(v) for v in self.violations]}
        )


def check_partition(t: RootedTree, p: TreePartition, tau, k: int) -> PartitionReport:
    """Independently verify properties (a)-(g) plus structural sanity."""
    tau = as_fraction(tau)
    bad: list[tuple[str, str]] = []
    w = p.w_a | p.w_b
    subtrees = list(p.trees_a) + list(p.trees_b)
    listed_attach = list(p.attachments_a) + list(p.attachments_b)

    if p.w_a & p.w_b:
        bad.append(("w-overlap", f"{sorted(p.w_a & p.w_b)[:3]}"))
    seen_in_subtrees: set[int] = set()
    for s in subtrees:
        if s & w:
            bad.append(("overlap", f"subtree meets W at {sorted(s & w)[:3]}"))
        dup = s & seen_in_subtrees
        if dup:
            bad.append(("overlap", f"vertices {sorted(dup)[:3]} in two subtrees"))
        seen_in_subtrees |= s
    all_ids = seen_in_subtrees | w
    if all_ids != set(range(t.n)):
        missing = set(range(t.n)) - all_ids
        extra = all_ids - set(range(t.n))
        bad.append(("cover", f"missing={sorted(missing)[:3]} extra={sorted(extra)[:3]}"))

    for s in subtrees:
        if not s:
            bad.append(("connectivity", "empty subtree"))
            continue
        start = min(s)
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u in t.neighbors(v):
                if u in s and u not in seen:
                    seen.add(u)
                    stack.append(u)
        if seen != s:
            bad.append(("connectivity", f"subtree {sorted(s)[:4]}... disconnected"))

    # recompute true attachments; metadata must match them
    cut = set(w)
    actual: list[list[tuple[int, int]]] = []
    for s in subtrees:
        edges = []
        for v in sorted(s):
            for u in t.neighbors(v):
                if u in cut:
                    edges.append((u, v))
        edges.sort()
        actual.append(edges)
    for s, listed, act in zip(subtrees, listed_attach, actual):
        if sorted(listed) != act:
            bad.append(
                ("attachment-mismatch", f"subtree {sorted(s)[:4]}: listed {listed} vs {act}")
            )

    # (a)
    for s in subtrees:
        if len(s) >= tau * k:
            bad.append(("a", f"subtree of order {len(s)} >= tau*k = {tau * k}"))
    # (b)
    owner: dict[int, int] = {}
    for i, s in enumerate(subtrees):
        for v in s:
            owner[v] = i
    for u, v in t.edges:
        if u in owner and v in owner and owner[u] != owner[v]:
            bad.append(("b", f"tree edge ({u},{v}) joins two subtrees"))
    # (c)
    if len(w) >= Fraction(100) / tau:
        bad.append(("c", f"|W| = {len(w)} >= 100/tau = {Fraction(100) / tau}"))
    # (d)
    ok_d = False
    for cls_a in (0, 1):
        if all(t.color_class(v) == cls_a for v in p.w_a) and all(
            t.color_class(v) == 1 - cls_a for v in p.w_b
        ):
            ok_d = True
    if not ok_d:
        bad.append(("d", "W_A/W_B not in opposite bipartition classes"))
    # (e)
    for s, act in zip(p.trees_b, actual[len(p.trees_a):]):
        ws = {u for u, _ in act}
        if len(ws) != 1 or not ws <= p.w_b:
            bad.append(("e", f"B-subtree {sorted(s)[:4]} attaches to {sorted(ws)}"))
    # (f)
    for s, act in zip(p.trees_a, actual[: len(p.trees_a)]):
        ws = {u for u, _ in act}
        if len(ws) > 2 or not ws <= p.w_a:
            bad.append(("f", f"A-subtree {sorted(s)[:4]} attaches to {sorted(ws)}"))
    # (g)
    vol_b = sum(len(s) for s in p.trees_b)
    if not (vol_b < Fraction(k, 2)):
        bad.append(("g", f"B-family volume {vol_b} >= k/2 = {Fraction(k, 2)}"))

    return PartitionReport(passed=not bad, violations=bad)
