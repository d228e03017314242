"""Digraphs, oriented walks, levels, products.

A digraph is a vertex count plus a list of arcs (ordered pairs).  Vertices
are 0..n-1.  Labels are optional and purely cosmetic (kept through JSON
round-trips, used by the bundled showcase instance to talk about named
vertices).
"""

from __future__ import annotations

import json
from collections import deque

from .caps import get_caps
from .errors import CapExceeded, InvalidInput


class Digraph:
    def __init__(self, n, arcs, labels=None):
        if n < 0:
            raise InvalidInput("vertex count must be >= 0")
        seen = set()
        out = [[] for _ in range(n)]
        inn = [[] for _ in range(n)]
        clean = []
        for arc in arcs:
            u, v = arc
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInput(f"arc ({u},{v}) out of range for n={n}")
            if (u, v) in seen:
                continue
            seen.add((u, v))
            clean.append((u, v))
            out[u].append(v)
            inn[v].append(u)
        clean.sort()
        self.n = n
        self.arcs = clean
        self.arc_set = seen
        self.out = [sorted(a) for a in out]
        self.inn = [sorted(a) for a in inn]
        if labels is not None:
            if len(labels) != n:
                raise InvalidInput("labels length must equal n")
            labels = [str(x) for x in labels]
        self.labels = labels

    def has_arc(self, u, v):
        return (u, v) in self.arc_set

    def neighbours(self, v):
        """Out- and in-neighbours, sorted, without duplicates."""
        return sorted(set(self.out[v]) | set(self.inn[v]))

    def degree(self, v):
        return len(self.out[v]) + len(self.inn[v])

    def index_of(self, label):
        if self.labels is None:
            raise InvalidInput("digraph has no labels")
        return self.labels.index(label)

    def induced(self, vertices):
        """Induced subdigraph; returns (digraph, old->new id map)."""
        vs = sorted(set(vertices))
        remap = {v: i for i, v in enumerate(vs)}
        arcs = [(remap[u], remap[v]) for (u, v) in self.arcs
                if u in remap and v in remap]
        labels = [self.labels[v] for v in vs] if self.labels else None
        return Digraph(len(vs), arcs, labels), remap

    # --- JSON ---

    def to_json(self):
        doc = {"n": self.n, "arcs": [list(a) for a in self.arcs]}
        if self.labels is not None:
            doc["labels"] = self.labels
        return doc

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            n = int(doc["n"])
            arcs = [(int(u), int(v)) for u, v in doc["arcs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad digraph JSON: {exc}") from exc
        return cls(n, arcs, doc.get("labels"))

    def __repr__(self):
        return f"Digraph(n={self.n}, arcs={len(self.arcs)})"

    def __eq__(self, other):
        return (isinstance(other, Digraph) and self.n == other.n
                and self.arcs == other.arcs)


def weak_components(g: Digraph):
    """Weak components as sorted vertex lists, ordered by smallest member."""
    seen = [False] * g.n
    comps = []
    for s in range(g.n):
        if seen[s]:
            continue
        comp = []
        dq = deque([s])
        seen[s] = True
        while dq:
            v = dq.popleft()
            comp.append(v)
            for w in g.out[v] + g.inn[v]:
                if not seen[w]:
                    seen[w] = True
                    dq.append(w)
        comps.append(sorted(comp))
    comps.sort(key=lambda c: c[0])
    return comps


def levels(g: Digraph):
    """Level assignment (lvl(v)+1 == lvl(w) for every arc v->w), or None.

    Levels are normalised so each weak component starts at 0.  A digraph
    admitting such an assignment is balanced; its height is max(level).
    """
    lvl = [None] * g.n
    for comp in weak_components(g):
        s = comp[0]
        lvl[s] = 0
        dq = deque([s])
        while dq:
            v = dq.popleft()
            for w in g.out[v]:
                if lvl[w] is None:
                    lvl[w] = lvl[v] + 1
                    dq.append(w)
                elif lvl[w] != lvl[v] + 1:
                    return None
            for w in g.inn[v]:
                if lvl[w] is None:
                    lvl[w] = lvl[v] - 1
                    dq.append(w)
                elif lvl[w] != lvl[v] - 1:
                    return None
        base = min(lvl[v] for v in comp)
        for v in comp:
            lvl[v] -= base
    return lvl


def height(g: Digraph):
    lv = levels(g)
    if lv is None:
        return None
    return max(lv) if lv else 0


def product(g1: Digraph, g2: Digraph, caps=None):
    """Direct product: arcs ((u1,u2),(v1,v2)) iff u1->v1 and u2->v2.

    Vertex (u1,u2) gets id u1*g2.n + u2.  Refuses (CapExceeded) above the
    product_vertices cap.
    """
    caps = get_caps(caps)
    nv = g1.n * g2.n
    if nv > caps["product_vertices"]:
        raise CapExceeded("product_vertices", caps["product_vertices"], nv)
    arcs = []
    for (u1, v1) in g1.arcs:
        for (u2, v2) in g2.arcs:
            arcs.append((u1 * g2.n + u2, v1 * g2.n + v2))
    return Digraph(nv, arcs)


class OrientedWalk:
    """A walk shape: +1 means a forward arc, -1 a backward arc.

    `net` is the level displacement end-over-start; `height` the total level
    span.  `realize` lays the walk out as fresh path vertices between two
    existing endpoints (used when a template arc is replaced by a pattern).
    """

    def __init__(self, steps):
        steps = tuple(int(s) for s in steps)
        if any(s not in (1, -1) for s in steps):
            raise InvalidInput("walk steps must be +1 or -1")
        if not steps:
            raise InvalidInput("walk must have at least one step")
        self.steps = steps

    @property
    def net(self):
        return sum(self.steps)

    @property
    def height(self):
        lo = hi = run = 0
        for s in self.steps:
            run += s
            lo = min(lo, run)
            hi = max(hi, run)
        return hi - lo

    def realize(self, start, end, next_id):
        """Arcs realising the walk from vertex `start` to vertex `end`.

        Interior vertices are next_id, next_id+1, ... (consecutive along the
        walk).  Returns (arcs, new_next_id).
        """
        arcs = []
        prev = start
        for i, s in enumerate(self.steps):
            last = i == len(self.steps) - 1
            cur = end if last else next_id
            if not last:
                next_id += 1
            if s == 1:
                arcs.append((prev, cur))
            else:
                arcs.append((cur, prev))
            prev = cur
        return arcs, next_id

    def __repr__(self):
        return "OrientedWalk(%s)" % "".join("+" if s == 1 else "-" for s in self.steps)
