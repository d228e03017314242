"""Brute-force homomorphism search, used as the reference oracle in tests.

Deliberately independent of the packed list engine: works on python sets
extracted once at entry, so a bug in the bit plumbing cannot leak in here.
Backtracking search that re-establishes arc consistency (over the arc rule
and any supplied pair lists) after every assignment; without the
propagation, long chain gadgets thrash.  The variable order is static, by
decreasing degree but restricted to vertices adjacent to the already
ordered ones (global max when disconnected), so chains are swept end to
end instead of being probed at random.
"""

from collections import deque

from .caps import get_caps
from .errors import CapExceeded, InvalidInput


def _static_order(g):
    n = g.n
    deg = [g.degree(x) for x in range(n)]
    placed = [False] * n
    order = []
    adj = [set(g.out[x]) | set(g.inn[x]) for x in range(n)]
    frontier = set()
    for _ in range(n):
        pick = -1
        best = -1
        for x in sorted(frontier):
            if not placed[x] and deg[x] > best:
                best = deg[x]
                pick = x
        if pick < 0:
            for x in range(n):
                if not placed[x] and deg[x] > best:
                    best = deg[x]
                    pick = x
        placed[pick] = True
        order.append(pick)
        frontier.discard(pick)
        frontier |= {w for w in adj[pick] if not placed[w]}
    return order


def _constraint_maps(g, h, lists, doms):
    """Per ordered vertex pair: list of value->partners maps to satisfy."""
    out_sets = [set(h.out[a]) for a in range(h.n)]
    in_sets = [set(h.inn[a]) for a in range(h.n)]
    cons = {}

    def add(x, y, mapping):
        cons.setdefault((x, y), []).append(mapping)

    for (u, v) in g.arcs:
        if u == v:
            continue  # loops were folded into the domains
        add(u, v, {a: out_sets[a] for a in range(h.n)})
        add(v, u, {a: in_sets[a] for a in range(h.n)})
    if lists is not None:
        for x in range(g.n):
            ux = doms[x]
            for y in range(x + 1, g.n):
                uy = doms[y]
                ps = lists.pair_set(x, y)
                if len(ps) >= len(ux) * len(uy) and not (
                    g.has_arc(x, y) or g.has_arc(y, x)
                ):
                    continue
                fwd = {}
                bwd = {}
                for a, b in ps:
                    fwd.setdefault(a, set()).add(b)
                    bwd.setdefault(b, set()).add(a)
                add(x, y, fwd)
                add(y, x, bwd)
    return cons


def _search(g, h, lists, anchors, caps, count_all):
    n = g.n
    if n == 0:
        return 1 if count_all else []
    doms = []
    if lists is not None:
        for x in range(n):
            doms.append(set(lists.unary_set(x)))
    else:
        for x in range(n):
            doms.append(set(range(h.n)))
    if anchors:
        for x, a in anchors.items():
            if x < 0 or x >= n:
                raise InvalidInput("anchor vertex %r outside V(G)" % (x,))
            doms[x] = doms[x] & {int(a)}
    for x in range(n):
        if g.has_arc(x, x):
            doms[x] = {a for a in doms[x] if h.has_arc(a, a)}
    if any(not d for d in doms):
        return 0 if count_all else None

    cons = _constraint_maps(g, h, lists, doms)
    neigh = {}
    for (x, y) in cons:
        neigh.setdefault(x, []).append(y)

    def propagate(seed_vertices, trail):
        work = deque()
        for s in seed_vertices:
            for y in neigh.get(s, ()):
                work.append((s, y))
        while work:
            x, y = work.popleft()
            dy = doms[y]
            survivors = None
            for mapping in cons[(x, y)]:
                sup = set()
                for a in doms[x]:
                    s = mapping.get(a)
                    if s:
                        sup.update(s)
                survivors = sup if survivors is None else (survivors & sup)
                if not survivors:
                    break
            dead = dy - survivors if survivors is not None else set()
            if dead:
                doms[y] -= dead
                trail.append((y, dead))
                if not doms[y]:
                    return False
                for w in neigh.get(y, ()):
                    if w != x:
                        work.append((y, w))
        return True

    # initial closure (also folds anchors in)
    root_trail = []
    if not propagate(range(n), root_trail):
        return 0 if count_all else None

    order = _static_order(g)
    budget = [caps["oracle_nodes"]]
    found = [0]
    result = [None]

    def rec(i):
        if i == n:
            found[0] += 1
            if not count_all:
                result[0] = [next(iter(doms[x])) for x in range(n)]
            return not count_all
        x = order[i]
        if len(doms[x]) == 1:
            return rec(i + 1)
        for a in sorted(doms[x]):
            budget[0] -= 1
            if budget[0] < 0:
                raise CapExceeded("oracle_nodes", caps["oracle_nodes"])
            trail = [(x, doms[x] - {a})]
            doms[x] = {a}
            if propagate([x], trail) and rec(i + 1):
                return True
            for v, removed in trail:
                doms[v] |= removed
        return False

    rec(0)
    if count_all:
        return found[0]
    return result[0]


def brute_force_hom(g, h, lists=None, anchors=None, caps=None):
    """First homomorphism g -> h honouring lists/anchors, else None.

    Enforces the arc rule from H directly, plus pair lists when a
    ListSystem is supplied.  Raises CapExceeded after oracle_nodes nodes.
    """
    caps = get_caps(caps)
    return _search(g, h, lists, anchors, caps, count_all=False)


def count_homs(g, h, lists=None, anchors=None, caps=None):
    """Number of homomorphisms (full enumeration, same constraints)."""
    caps = get_caps(caps)
    return _search(g, h, lists, anchors, caps, count_all=True)
