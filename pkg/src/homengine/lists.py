"""Bit-packed list systems: per-vertex candidate lists plus pair lists.

The representation: each G-vertex x has a candidate domain dom[x] (sorted
H-vertex ids, at most 64 of them).  unary[x] is a uint64 mask over dom[x].
P[x,y,i] is a uint64 mask over dom[y]: the partners of dom[x][i] in the
pair list of (x,y).  Conventions maintained by every mutator:

  * transpose symmetry: bit (i,b) set in P[x,y] iff bit (b,i) set in P[y,x];
  * diagonal: P[x,x,i] == bit(i) iff i in unary[x], else 0;
  * rows of values outside unary[x] are zero, and rows are subsets of
    unary[y] (rule A);
  * for G-adjacent x,y the pair list is a subset of the arc filter.

F[x,y] == 0 flags pairs known to be the full product of the endpoint
lists; the fixpoint kernel skips compositions through such pairs (they
cannot prune anything that the support rule does not already enforce).
"""

from collections import deque

import numpy as np

from . import _kernels as K
from .caps import get_caps
from .digraph import Digraph
from .errors import CapExceeded, InvalidInput

FULL64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def _mask_of(bits):
    m = np.uint64(0)
    for b in bits:
        m |= np.uint64(1) << np.uint64(b)
    return m


def _bits_of(mask):
    out = []
    m = int(mask)
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


class ListSystem:
    """Unary + pair lists for hom(G -> H), bit-packed."""

    def __init__(self, g, h, dom, unary, P, F):
        self.g = g
        self.h = h
        self.dom = dom                      # list of sorted int ndarrays (H ids)
        self.nd = np.array([len(d) for d in dom], dtype=np.int64)
        self.mmax = int(self.nd.max()) if len(dom) else 0
        self.unary = unary                  # (n,) uint64
        self.P = P                          # (n,n,mmax) uint64
        self.F = F                          # (n,n) uint8
        self._dmaps = [None] * g.n

    # -- value/bit translation ------------------------------------------------

    def _dmap(self, x):
        d = self._dmaps[x]
        if d is None:
            d = {int(v): i for i, v in enumerate(self.dom[x])}
            self._dmaps[x] = d
        return d

    def value_bit(self, x, a):
        i = self._dmap(x).get(int(a))
        if i is None:
            raise InvalidInput("value %r not in the domain of vertex %d" % (a, x))
        return i

    # -- constructors ----------------------------------------------------------

    @classmethod
    def init_full(cls, g, h, caps=None):
        """Full lists: every H-vertex for every G-vertex, arc-filtered pairs.

        When |V(H)| > 64 a plain arc-consistency sweep runs first on python
        sets and the surviving values become the packed domains; if any
        domain still exceeds 64 values that is a cap error.  The observable
        result of initFull followed by preProcess is unchanged by the
        staging because preProcess subsumes arc consistency.
        """
        caps = get_caps(caps)
        n = g.n
        if h.n <= 64:
            doms = [list(range(h.n)) for _ in range(n)]
        else:
            doms = _ac_domains(g, h)
            if doms is None:
                doms = [[] for _ in range(n)]
        for x in range(n):
            if g.has_arc(x, x):
                doms[x] = [a for a in doms[x] if h.has_arc(a, a)]
            if len(doms[x]) > caps["bitset_domain"]:
                raise CapExceeded("bitset_domain", caps["bitset_domain"], len(doms[x]))
        return cls._build(g, h, doms, None)

    @classmethod
    def from_constraints(cls, g, h, unary_sets, pair_map, caps=None):
        """Explicit lists.  unary_sets: per-vertex iterables of H ids.
        pair_map: {(x,y): iterable of (a,b)} constraints, intersected with
        the arc filter; unspecified pairs start as the (arc-filtered) full
        product.  Constraints are applied in both orientations.
        """
        caps = get_caps(caps)
        doms = []
        for x in range(g.n):
            vals = sorted(set(int(a) for a in unary_sets[x]))
            for a in vals:
                if a < 0 or a >= h.n:
                    raise InvalidInput("list value %d outside V(H)" % a)
            if g.has_arc(x, x):
                vals = [a for a in vals if h.has_arc(a, a)]
            if len(vals) > caps["bitset_domain"]:
                raise CapExceeded("bitset_domain", caps["bitset_domain"], len(vals))
            doms.append(vals)
        return cls._build(g, h, doms, pair_map)

    @classmethod
    def _build(cls, g, h, doms, pair_map):
        n = g.n
        dom = [np.array(sorted(d), dtype=np.int64) for d in doms]
        nd = [len(d) for d in dom]
        mmax = max(nd) if n else 0
        unary = np.zeros(n, dtype=np.uint64)
        for x in range(n):
            if nd[x]:
                unary[x] = (FULL64 >> np.uint64(64 - nd[x])) if nd[x] < 64 else FULL64
        P = np.zeros((n, n, max(mmax, 1)), dtype=np.uint64)
        ls = cls(g, h, dom, unary, P, np.ones((n, n), dtype=np.uint8))
        for x in range(n):
            for y in range(n):
                if x == y:
                    for i in range(nd[x]):
                        P[x, x, i] = np.uint64(1) << np.uint64(i)
                else:
                    rows = ls._default_rows(x, y)
                    P[x, y, : nd[x]] = rows
        if pair_map:
            for (x, y), pairs in pair_map.items():
                if x == y:
                    raise InvalidInput("pair constraint on a single vertex")
                allow = np.zeros(max(mmax, 1), dtype=np.uint64)
                dmx = ls._dmap(x)
                dmy = ls._dmap(y)
                for a, b in pairs:
                    ia = dmx.get(int(a))
                    ib = dmy.get(int(b))
                    if ia is None or ib is None:
                        continue
                    allow[ia] |= np.uint64(1) << np.uint64(ib)
                for i in range(nd[x]):
                    P[x, y, i] &= allow[i]
                for j in range(nd[y]):
                    m = np.uint64(0)
                    for i in range(nd[x]):
                        if (P[x, y, i] >> np.uint64(j)) & np.uint64(1):
                            m |= np.uint64(1) << np.uint64(i)
                    P[y, x, j] &= m
        K.compute_full_flags(P, unary, ls.nd, ls.F, n)
        return ls

    def _default_rows(self, x, y):
        """Arc-filtered full product rows for the ordered pair (x,y)."""
        ndx = len(self.dom[x])
        ndy = len(self.dom[y])
        full = (FULL64 >> np.uint64(64 - ndy)) if ndy < 64 else FULL64
        if ndy == 0:
            full = np.uint64(0)
        rows = np.full(ndx, full, dtype=np.uint64)
        if self.g.has_arc(x, y):
            dmy = self._dmap(y)
            for i in range(ndx):
                a = int(self.dom[x][i])
                m = np.uint64(0)
                for b in self.h.out[a]:
                    j = dmy.get(b)
                    if j is not None:
                        m |= np.uint64(1) << np.uint64(j)
                rows[i] &= m
        if self.g.has_arc(y, x):
            dmy = self._dmap(y)
            for i in range(ndx):
                a = int(self.dom[x][i])
                m = np.uint64(0)
                for b in self.h.inn[a]:
                    j = dmy.get(b)
                    if j is not None:
                        m |= np.uint64(1) << np.uint64(j)
                rows[i] &= m
        return rows

    # -- accessors ---------------------------------------------------------

    def unary_set(self, x):
        return tuple(int(self.dom[x][i]) for i in _bits_of(self.unary[x]))

    def pair_set(self, x, y):
        out = set()
        for i in _bits_of(self.unary[x]):
            row = self.P[x, y, i]
            a = int(self.dom[x][i])
            for j in _bits_of(row):
                out.add((a, int(self.dom[y][j])))
        return out

    def has_value(self, x, a):
        d = self._dmap(x).get(int(a))
        if d is None:
            return False
        return bool((self.unary[x] >> np.uint64(d)) & np.uint64(1))

    def has_pair(self, x, a, y, b):
        i = self._dmap(x).get(int(a))
        j = self._dmap(y).get(int(b))
        if i is None or j is None:
            return False
        return bool((self.P[x, y, i] >> np.uint64(j)) & np.uint64(1))

    def list_size(self, x):
        return int(self.unary[x]).bit_count()

    def sum_sizes(self):
        return sum(int(self.unary[x]).bit_count() for x in range(self.g.n))

    def all_singleton(self):
        for x in range(self.g.n):
            u = int(self.unary[x])
            if u == 0 or (u & (u - 1)) != 0:
                return False
        return True

    def any_empty(self):
        return any(int(self.unary[x]) == 0 for x in range(self.g.n))

    def pair_empty(self, x, y):
        return not bool(self.P[x, y, : self.nd[x]].any())

    def assignment(self):
        out = []
        for x in range(self.g.n):
            u = int(self.unary[x])
            if u == 0 or (u & (u - 1)) != 0:
                raise InvalidInput("lists are not all singleton")
            out.append(int(self.dom[x][u.bit_length() - 1]))
        return out

    # -- mutators ------------------------------------------------------------

    def remove_value(self, x, a):
        """Drop a from L(x): zeroes its rows everywhere (keeps rule A)."""
        i = self.value_bit(x, a)
        bit = np.uint64(1) << np.uint64(i)
        if not (self.unary[x] & bit):
            return []
        self.unary[x] = self.unary[x] & ~bit
        seeds = []
        self.P[x, x, i] = np.uint64(0)
        nb = ~bit
        for w in range(self.g.n):
            if w == x:
                continue
            row = self.P[x, w, i]
            if row:
                self.P[x, w, i] = np.uint64(0)
                for j in _bits_of(row):
                    self.P[w, x, j] &= nb
            self.F[x, w] = 1
            self.F[w, x] = 1
            seeds.append((x, w))
        return seeds

    def remove_pair(self, x, a, y, b):
        """Drop (a,b) from the pair list of (x,y), both orientations.

        Returns (i, j, emptied_xy, emptied_yx): the bit indices and whether
        either directed row became empty, for the caller's bookkeeping.
        """
        if x == y:
            raise InvalidInput("diagonal pair lists are not directly mutable")
        i = self.value_bit(x, a)
        j = self.value_bit(y, b)
        bi = np.uint64(1) << np.uint64(i)
        bj = np.uint64(1) << np.uint64(j)
        if not (self.P[x, y, i] & bj):
            return i, j, False, False
        self.P[x, y, i] = self.P[x, y, i] & ~bj
        self.P[y, x, j] = self.P[y, x, j] & ~bi
        self.F[x, y] = 1
        self.F[y, x] = 1
        return i, j, self.P[x, y, i] == 0, self.P[y, x, j] == 0

    def restrict(self, assignments):
        """Filtered copy: pin each given vertex to its value.  Pure filter --
        pair rows are clamped to the surviving values, nothing propagates.
        """
        out = self.copy()
        for x, a in assignments.items():
            i = out.value_bit(x, a)
            bit = np.uint64(1) << np.uint64(i)
            if not (out.unary[x] & bit):
                out.unary[x] = np.uint64(0)
            else:
                out.unary[x] = bit
            out.F[x, :] = 1
            out.F[:, x] = 1
        K.normalize_rule_a(out.P, out.unary, out.nd, out.g.n)
        return out

    def copy(self):
        c = ListSystem(self.g, self.h, self.dom, self.unary.copy(),
                       self.P.copy(), self.F.copy())
        c._dmaps = self._dmaps
        return c

    def induced(self, vertices):
        """Sub-system on a vertex subset.  Returns (system, old ids list)."""
        sub_g, remap = self.g.induced(vertices)
        order = sorted(remap)
        dom = [self.dom[v] for v in order]
        nd = np.array([len(d) for d in dom], dtype=np.int64)
        mm = int(nd.max()) if len(order) else 1
        idx = np.array(order, dtype=np.int64)
        P = np.ascontiguousarray(self.P[np.ix_(idx, idx)][:, :, :mm])
        F = np.ascontiguousarray(self.F[np.ix_(idx, idx)])
        sub = ListSystem(sub_g, self.h, dom, self.unary[idx].copy(), P, F)
        sub._dmaps = [self._dmaps[v] for v in order]
        return sub, order

    # -- consistency --------------------------------------------------------

    def pre_process(self, seeds=None):
        """(2,3)-consistency fixpoint.  seeds: dirty pairs, or None for a
        full pass.  Returns False iff some list empties."""
        n = self.g.n
        if n == 0:
            return True
        if self.any_empty():
            return False
        if seeds is None:
            K.normalize_rule_a(self.P, self.unary, self.nd, n)
            sx = np.empty(0, dtype=np.int64)
            sy = np.empty(0, dtype=np.int64)
        else:
            if not seeds:
                return True
            sx = np.array([s[0] for s in seeds], dtype=np.int64)
            sy = np.array([s[1] for s in seeds], dtype=np.int64)
        ok = K.pair_fixpoint(self.P, self.unary, self.nd, self.F, n, sx, sy)
        return bool(ok)

    def gl_components(self):
        """Weak components of the constrained product digraph, each returned
        as its own consistent list system.  Components that preprocess to
        empty are dropped; a connected system returns [self] unchanged.
        """
        work = deque([self])
        done = []
        while work:
            ls = work.popleft()
            n = ls.g.n
            adj = np.zeros((n, n), dtype=np.uint8)
            for (u, v) in ls.g.arcs:
                adj[u, v] = 1
                adj[v, u] = 1
            labels = np.full((n, max(ls.mmax, 1)), -1, dtype=np.int32)
            ncomp = K.product_component_labels(ls.P, ls.unary, ls.nd, n, adj, labels)
            if ncomp <= 1:
                done.append(ls)
                continue
            for c in range(ncomp):
                sub = ls.copy()
                viable = True
                for x in range(n):
                    m = np.uint64(0)
                    for i in range(int(ls.nd[x])):
                        if labels[x, i] == c:
                            m |= np.uint64(1) << np.uint64(i)
                    sub.unary[x] = sub.unary[x] & m
                    if sub.unary[x] == 0:
                        viable = False
                        break
                if not viable:
                    continue
                sub.F[:, :] = 1
                K.normalize_rule_a(sub.P, sub.unary, sub.nd, n)
                if sub.pre_process():
                    work.append(sub)
        return done

    # -- (de)serialization ----------------------------------------------------

    def to_json(self):
        pairs = {}
        for x in range(self.g.n):
            for y in range(x + 1, self.g.n):
                rows = self._default_rows(x, y)
                cur = self.P[x, y, : self.nd[x]]
                dflt = rows.copy()
                for i in range(len(dflt)):
                    if not (self.unary[x] >> np.uint64(i)) & np.uint64(1):
                        dflt[i] = np.uint64(0)
                    else:
                        dflt[i] &= self.unary[y]
                if not np.array_equal(cur, dflt):
                    pairs["%d,%d" % (x, y)] = sorted(self.pair_set(x, y))
        return {
            "g": self.g.to_json(),
            "h": self.h.to_json(),
            "unary": [list(self.unary_set(x)) for x in range(self.g.n)],
            "pairs": pairs,
        }

    @classmethod
    def from_json(cls, obj, caps=None):
        g = Digraph.from_json(obj["g"])
        h = Digraph.from_json(obj["h"])
        unary = obj.get("unary")
        if unary is None:
            unary = [list(range(h.n)) for _ in range(g.n)]
        if len(unary) != g.n:
            raise InvalidInput("unary list count != |V(G)|")
        pair_map = {}
        for key, entries in (obj.get("pairs") or {}).items():
            xs, ys = key.split(",")
            pair_map[(int(xs), int(ys))] = [(int(a), int(b)) for a, b in entries]
        return cls.from_constraints(g, h, unary, pair_map, caps=caps)


def _ac_domains(g, h):
    """Plain arc-consistency on python sets; None if some domain empties."""
    doms = [set(range(h.n)) for _ in range(g.n)]
    out_sets = [set(h.out[a]) for a in range(h.n)]
    in_sets = [set(h.inn[a]) for a in range(h.n)]
    work = deque()
    seen = set()
    for (u, v) in g.arcs:
        for item in ((u, v, True), (v, u, False)):
            if item not in seen:
                seen.add(item)
                work.append(item)
    arcs_at = {}
    for (u, v) in g.arcs:
        arcs_at.setdefault(u, []).append((u, v, True))
        arcs_at.setdefault(v, []).append((v, u, False))
    while work:
        x, y, fwd = work.popleft()
        seen.discard((x, y, fwd))
        good = set()
        for a in doms[x]:
            partners = out_sets[a] if fwd else in_sets[a]
            if partners & doms[y]:
                good.add(a)
        if len(good) != len(doms[x]):
            doms[x] = good
            if not good:
                return None
            for item in arcs_at.get(x, []):
                # re-check neighbours of x (their support may have gone)
                u, v, f = item
                back = (v, u, not f)
                if back not in seen:
                    seen.add(back)
                    work.append(back)
    return [sorted(d) for d in doms]
