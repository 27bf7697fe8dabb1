"""Proper edge coloring with at most Delta+1 colors (Misra-Gries).

The classic constructive proof of Vizing's bound: to color edge (u, v),
build a maximal fan of u starting at v, pick a color c free at u and a
color d free at the fan's last leaf, flip the maximal cd-alternating path
through u, then rotate the fan prefix that d allows and finish with d.
"""

from __future__ import annotations

from .graphs import Graph, normalize_edge


def edge_coloring(g: Graph) -> list[set[tuple[int, int]]]:
    """Color all edges of g with at most max_degree+1 colors.

    Returns the color classes (matchings) as sets of normalized edges;
    empty classes are dropped.  Deterministic: edges processed in sorted
    order, colors picked smallest-first.
    """
    if g.m == 0:
        return []
    max_colors = g.max_degree() + 1
    color_of: dict[tuple[int, int], int] = {}
    # used[v][c] -> neighbor joined to v by color c (or absent)
    used: list[dict[int, int]] = [dict() for _ in range(g.n)]

    def free_color(v: int) -> int:
        for c in range(max_colors):
            if c not in used[v]:
                return c
        raise AssertionError("no free color within Delta+1")

    def set_color(u: int, v: int, c: int) -> None:
        old = color_of.get(normalize_edge(u, v))
        if old is not None:
            del used[u][old]
            del used[v][old]
        color_of[normalize_edge(u, v)] = c
        used[u][c] = v
        used[v][c] = u

    def flip_path(start: int, c: int, d: int) -> None:
        """Swap colors c and d along the maximal cd-path from start."""
        v, col = start, c
        path = []
        while col in used[v]:
            u = used[v][col]
            path.append((v, u, col))
            v, col = u, (d if col == c else c)
        for x, y, col in path:
            e = normalize_edge(x, y)
            del used[x][col]
            del used[y][col]
            del color_of[e]
        for x, y, col in path:
            set_color(x, y, d if col == c else c)

    for u, v in sorted(g.edges):
        # maximal fan f0..fk around u: color(u, f_{i+1}) must be free at f_i
        fan = [v]
        fan_set = {v}
        while True:
            last = fan[-1]
            extended = False
            for c in sorted(used[u]):
                w = used[u][c]
                if w in fan_set:
                    continue
                if c not in used[last]:
                    fan.append(w)
                    fan_set.add(w)
                    extended = True
                    break
            if not extended:
                break
        c = free_color(u)
        d = free_color(fan[-1])
        if c != d:
            flip_path(u, d, c)

        # smallest fan index where d is free and the prefix is still a fan
        # under the post-flip colors
        def prefix_is_fan(idx: int) -> bool:
            for j in range(idx):
                col = color_of[normalize_edge(u, fan[j + 1])]
                if col in used[fan[j]]:
                    return False
            return True

        w_idx = None
        for i, w in enumerate(fan):
            if d not in used[w] and prefix_is_fan(i):
                w_idx = i
                break
        if w_idx is None:
            raise AssertionError("fan rotation found no slot")
        for i in range(w_idx):
            nxt_color = color_of[normalize_edge(u, fan[i + 1])]
            set_color(u, fan[i], nxt_color)
        set_color(u, fan[w_idx], d)

    classes: list[set[tuple[int, int]]] = [set() for _ in range(max_colors)]
    for e, c in color_of.items():
        classes[c].add(e)
    return [cls for cls in classes if cls]


def is_proper_matching_cover(g: Graph, matchings: list[set[tuple[int, int]]]) -> bool:
    """Every edge in exactly one class, every class a matching."""
    seen: set[tuple[int, int]] = set()
    for cls in matchings:
        touched: set[int] = set()
        for u, v in cls:
            e = normalize_edge(u, v)
            if e in seen or e not in g.edges:
                return False
            seen.add(e)
            if u in touched or v in touched:
                return False
            touched.add(u)
            touched.add(v)
    return seen == g.edges
