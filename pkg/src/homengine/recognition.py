"""Deciding whether a relational structure carries a 4-ary Siggers
operation (f(a,r,e,a) = f(r,a,r,e) compatible with every relation).

The question is turned into one list-homomorphism instance: vertices of
G are 4-tuples of hyperedges of the structure, vertices of H are single
hyperedges, and position-equality patterns between tuples become list
and pair constraints.  A homomorphism assigns a hyperedge to every
4-tuple; reading it coordinatewise yields the operation table.

The instance itself is solved without any operation in hand: the same
sym-diff scan the digraph solver runs, then a branching finisher that
rectangle-cleans two-value patterns and hands the rest to the
value-elimination solver.
"""

from collections import deque

import numpy as np

from . import _kernels as K
from . import solver
from .caps import get_caps
from .digraph import Digraph, weak_components
from .errors import CapExceeded, InvalidInput, InvariantViolation
from .lists import ListSystem, _bits_of
from .polymorphism import OpTable, _UF, check_property, is_polymorphism


class Relation:
    """One relation: same-length tuples over 0..n-1, deduplicated."""

    def __init__(self, arity, tuples):
        self.arity = int(arity)
        if self.arity < 1:
            raise InvalidInput("relation arity must be >= 1")
        seen = set()
        for t in tuples:
            t = tuple(int(v) for v in t)
            if len(t) != self.arity:
                raise InvalidInput("tuple %r does not match arity %d"
                                   % (t, self.arity))
            seen.add(t)
        self.tuples = sorted(seen)


class RelationalStructure:
    """A finite domain plus a list of relations on it."""

    def __init__(self, domain_size, relations):
        self.domain_size = int(domain_size)
        if self.domain_size < 1:
            raise InvalidInput("domain must be non-empty")
        rels = []
        for r in relations:
            if isinstance(r, Relation):
                pass
            elif isinstance(r, (tuple, list)) and len(r) == 2:
                r = Relation(r[0], r[1])
            else:
                r = Relation(r.arity, r.tuples)
            for t in r.tuples:
                for v in t:
                    if not 0 <= v < self.domain_size:
                        raise InvalidInput("tuple entry %d outside the domain"
                                           % v)
            rels.append(r)
        self.relations = rels

    def to_json(self):
        return {"domain": self.domain_size,
                "relations": [{"arity": r.arity,
                               "tuples": [list(t) for t in r.tuples]}
                              for r in self.relations]}

    @classmethod
    def from_json(cls, obj):
        try:
            dom = obj["domain"]
            rels = [(r["arity"], r["tuples"]) for r in obj["relations"]]
        except (KeyError, TypeError, IndexError) as e:
            raise InvalidInput("bad structure json: %s" % e)
        return cls(dom, rels)


class Hypergraph:
    """Hyperedges grouped into parts; edges of one part share a size."""

    def __init__(self, parts):
        self.parts = []
        for part in parts:
            part = sorted({tuple(int(v) for v in t) for t in part})
            if part and any(len(t) != len(part[0]) for t in part):
                raise InvalidInput("hyperedges in one part must have "
                                   "equal size")
            self.parts.append(part)

    @classmethod
    def from_structure(cls, s):
        return cls([r.tuples for r in s.relations])


def signature(t1, t2):
    """Position pairs (i, j) where t1[i] == t2[j]."""
    return {(i, j) for i, a in enumerate(t1)
            for j, b in enumerate(t2) if a == b}


class DetectionInstance:
    """The list instance an operation search reduces to.

    quads: per G vertex (part, 4 hyperedge indices); hlabel: per H vertex
    (part, hyperedge).  Lists live in `lists`.
    """

    def __init__(self, g, h, lists, hypergraph, quads, hlabel):
        self.g = g
        self.h = h
        self.lists = lists
        self.hypergraph = hypergraph
        self.quads = quads
        self.hlabel = hlabel


def _req(eq, qr, qc):
    """Constraint positions for a (row quad, col quad) pairing.

    Two patterns force tau[i] == omega[j]: all four coordinate tuples
    agree at (i, j), or the 1-2-1-2 / 2-1-2-1 interleaving does.
    """
    a1, b1, c1, d1 = (qr[..., i] for i in range(4))
    a2, b2, c2, d2 = (qc[..., i] for i in range(4))
    r1 = eq[a1, a2] & eq[b1, b2] & eq[c1, c2] & eq[d1, d2]
    r2 = (eq[a1, b2] & eq[d1, b2] & eq[b1, a2]
          & eq[b1, c2] & eq[c1, d2])
    return r1 | r2


def build_detection_instance(s, caps=None):
    """Builds (G, H, lists) for the operation search on structure s."""
    caps = get_caps(caps)
    hyper = Hypergraph.from_structure(s)
    parts = hyper.parts
    sizes = [len(p) for p in parts]
    total = sum(m ** 4 for m in sizes)
    if total > caps["detection_vertices"]:
        raise CapExceeded("detection_vertices", caps["detection_vertices"],
                          total)

    hlabel = []
    hbase = []
    for l, part in enumerate(parts):
        hbase.append(len(hlabel))
        hlabel.extend((l, t) for t in part)
    nh = len(hlabel)

    quads = []
    gbase = []
    Q = []
    for l, m in enumerate(sizes):
        gbase.append(len(quads))
        if m:
            ql = np.stack(np.meshgrid(*([np.arange(m, dtype=np.int64)] * 4),
                                      indexing="ij"), axis=-1).reshape(-1, 4)
        else:
            ql = np.zeros((0, 4), dtype=np.int64)
        Q.append(ql)
        quads.extend((l, tuple(int(v) for v in q)) for q in ql)
    ng = len(quads)

    T = [np.asarray(p, dtype=np.int64) if p else
         np.zeros((0, 1), dtype=np.int64) for p in parts]

    # unary lists: both patterns read on the vertex itself
    unary = [None] * ng
    for l in range(len(parts)):
        if not sizes[l]:
            continue
        eq = T[l][:, None, :, None] == T[l][None, :, None, :]
        req = _req(eq, Q[l], Q[l]).reshape(len(Q[l]), -1)
        tdif = (T[l][:, :, None] != T[l][:, None, :]).reshape(sizes[l], -1)
        viol = req.astype(np.float32) @ tdif.astype(np.float32).T
        for qi in range(len(Q[l])):
            unary[gbase[l] + qi] = [hbase[l] + int(t)
                                    for t in np.nonzero(viol[qi] == 0)[0]]

    g_arcs = []
    pair_map = {}
    harc = {}
    for l in range(len(parts)):
        for t in range(len(parts)):
            if not sizes[l] or not sizes[t]:
                continue
            eq = T[l][:, None, :, None] == T[t][None, :, None, :]
            kk = T[l].shape[1] * T[t].shape[1]
            neq = (~eq).reshape(sizes[l] * sizes[t], kk).astype(np.float32)
            hm = harc.setdefault((l, t),
                                 np.zeros((sizes[l], sizes[t]), dtype=bool))
            nl, nt = len(Q[l]), len(Q[t])
            step = max(1, 4_000_000 // max(1, nt * kk))
            for r0 in range(0, nl, step):
                rows = np.arange(r0, min(r0 + step, nl))
                ri = np.repeat(rows, nt)
                ci = np.tile(np.arange(nt), len(rows))
                req = _req(eq, Q[l][ri], Q[t][ci]).reshape(len(ri), kk)
                adj = req.any(axis=1)
                if l == t:
                    adj &= ri != ci
                sel = np.nonzero(adj)[0]
                if not sel.size:
                    continue
                viol = req[sel].astype(np.float32) @ neq.T
                allow = (viol == 0).reshape(len(sel), sizes[l], sizes[t])
                hm |= allow.any(axis=0)
                for si in range(len(sel)):
                    gx = gbase[l] + int(ri[sel[si]])
                    gy = gbase[t] + int(ci[sel[si]])
                    g_arcs.append((gx, gy))
                    ta, om = np.nonzero(allow[si])
                    pair_map[(gx, gy)] = [(hbase[l] + int(p), hbase[t] + int(q))
                                          for p, q in zip(ta, om)]

    h_arcs = []
    for (l, t), hm in sorted(harc.items()):
        for p, q in zip(*np.nonzero(hm)):
            h_arcs.append((hbase[l] + int(p), hbase[t] + int(q)))
    gd = Digraph(ng, g_arcs)
    hd = Digraph(nh, h_arcs)
    lists = ListSystem.from_constraints(gd, hd, unary, pair_map, caps=caps)
    return DetectionInstance(gd, hd, lists, hyper, quads, hlabel)


# -- solving the instance without an operation ---------------------------


def _checked(ls):
    vals = ls.assignment()
    if solver.verify(ls.g, ls.h, vals, ls):
        return vals
    return None


def weak_nu_list(ls, caps=None):
    """Decides a list instance whose target is only known to sit on the
    yes side of the operation search; hom or None.  Works on a copy."""
    return _weak_nu(ls.copy(), get_caps(caps), 0)


def _weak_nu(ls, caps, depth):
    if depth > ls.h.n:
        raise InvariantViolation("sym-diff recursion deeper than |V(H)|")
    if not ls.pre_process():
        return None
    n = ls.g.n
    if n == 0:
        return []
    if ls.all_singleton():
        return _checked(ls)
    comps = weak_components(ls.g)
    if len(comps) > 1:
        out = [None] * n
        for comp in comps:
            sub, order = ls.induced(comp)
            r = _weak_nu(sub, caps, depth)
            if r is None:
                return None
            for v, a in zip(order, r):
                out[v] = a
        return out
    pcomps = ls.gl_components()
    if not pcomps:
        return None
    if len(pcomps) > 1 or pcomps[0] is not ls:
        for sub in sorted(pcomps, key=lambda s: s.sum_sizes()):
            r = _weak_nu(sub, caps, depth)
            if r is not None:
                return r
        return None
    r = _scan_pairs(ls, caps, depth)
    if r[0] == "hom":
        return r[1]
    if r[0] == "empty":
        return None
    # the scan usually leaves the lists tight enough for a greedy pass
    # to close them outright
    shot = solver.greedy_hom(ls)
    if shot is not None:
        return shot[0]
    return _gtm(ls, caps)


def _scan_pairs(ls, caps, depth):
    """One full sym-diff pass; failed tests remove their (d1, e1) pair.
    ("empty",) when some pair list dies, ("hom", vals) when a test or a
    pooled witness covers the whole graph, ("done",) once stable."""
    n = ls.g.n
    shot = solver.greedy_hom(ls)
    if shot is not None:
        return ("hom", shot[0])
    state = solver._ScanState(ls)
    sarr = np.zeros(8, dtype=np.int64)
    # witnesses: verified homs of the whole instance.  Sound removals
    # never strip a pair a verified hom uses, so the pool needs no
    # upkeep afterwards.
    pool = []
    allv = np.arange(n, dtype=np.int64)
    for y in range(n):
        if int(ls.unary[y]).bit_count() < 2:
            continue
        state.reset_block()
        # full witnesses double as memo entries covering every vertex,
        # keyed by their value at this block's y, so the scan absorbs
        # their matches without surfacing them
        for _w, wb, wmask in pool:
            state.record_success_fast(int(wb[y]), allv, wmask)
        sac = {}
        ext_budget = 40
        rz, rd1, rd2, re1 = 0, 0, 0, -1
        while True:
            code = K.notmin_scan(
                ls.P, ls.unary, ls.nd, ls.F, n,
                y, rz, rd1, rd2, re1,
                *state.block_args(),
                state.EMPT, state.EMPTANY,
                state.out_members, state.out_tuple, sarr)
            if code == 0:
                break
            z = int(state.out_tuple[1])
            d1b = int(state.out_tuple[2])
            d2b = int(state.out_tuple[3])
            e1b = int(state.out_tuple[4])
            nm = int(state.out_tuple[5])
            d1 = int(ls.dom[y][d1b])
            d2 = int(ls.dom[y][d2b])
            e1 = int(ls.dom[z][e1b])
            rz, rd1, rd2, re1 = z, d1b, d2b, e1b
            if d1b not in sac:
                su = np.empty(n, dtype=np.uint64)
                if not K.pin_closure(ls.P, ls.unary, ls.nd, n, y, d1b, su):
                    su[:] = 0
                sac[d1b] = su
                cnt, pdead = solver.sac_batch(ls, state, y, d1b, su)
                if cnt:
                    if pdead:
                        return ("empty",)
                    state.after_removal()
                if not (int(su[z]) >> e1b) & 1:
                    continue
            phi = None
            for w, wb, _m in pool:
                if w[y] == d1 and w[z] == e1:
                    phi = (w, wb)
                    break
            marr = np.unique(np.concatenate(
                (state.out_members[:nm], np.array([y, z], dtype=np.int64))))
            if phi is not None:
                if len(marr) == n:
                    return ("hom", list(phi[0]))
                state.record_success_fast(
                    d1b, marr,
                    np.uint64(1) << phi[1][marr].astype(np.uint64))
                continue
            tsu = ls.P[y, marr, d1b] & ls.P[z, marr, e1b]
            tsu[int(np.searchsorted(marr, y))] = np.uint64(1) << np.uint64(d1b)
            tsu[int(np.searchsorted(marr, z))] = np.uint64(1) << np.uint64(e1b)
            sbits = None
            wiped = not tsu.all()
            if not wiped:
                su2 = np.zeros(n, dtype=np.uint64)
                su2[marr] = tsu
                if K.member_greedy(ls.P, ls.nd, su2, marr, len(marr)):
                    sbits = [int(su2[v]).bit_length() - 1 for v in marr]
            if sbits is not None and len(marr) == n:
                vals = [int(ls.dom[v][b]) for v, b in zip(marr, sbits)]
                if solver.verify(ls.g, ls.h, vals, ls):
                    return ("hom", vals)
                sbits = None
            if sbits is None and not wiped:
                inst = solver.build_sym_diff(ls, y, d1, d2, z, e1,
                                             members=[int(v) for v in marr])
                if inst.consistent:
                    r = _weak_nu(inst.lists, caps, depth + 1)
                else:
                    r = None
                if r is not None:
                    if len(marr) == n:
                        out = [None] * n
                        for v, a in zip(inst.order, r):
                            out[v] = a
                        return ("hom", out)
                    sbits = [int(np.searchsorted(ls.dom[v], a))
                             for v, a in zip(inst.order, r)]
            if sbits is None:
                i, j, em_ab, em_ba = ls.remove_pair(y, d1, z, e1)
                if em_ab:
                    state.note_emptied(y, z, i)
                if em_ba:
                    state.note_emptied(z, y, j)
                if ls.pair_empty(y, z):
                    return ("empty",)
                state.after_removal()
                continue
            # record the witness values rather than the derived lists:
            # the containment checks then outlive later removals
            state.record_success_fast(
                d1b, marr, np.uint64(1) << np.array(sbits, dtype=np.uint64))
            if ext_budget > 0:
                ext_budget -= 1
                got = solver.greedy_hom(
                    ls, {int(v): b for v, b in zip(marr, sbits)})
                if got is not None:
                    wmask = np.uint64(1) << got[1].astype(np.uint64)
                    pool.append((got[0], got[1], wmask))
                    state.record_success_fast(d1b, allv, wmask)
    return ("done",)


# -- the branching finisher ----------------------------------------------


def getting_to_minority(ls, caps=None):
    """Finishes a scan-stable instance by two-value branching; hom or
    None.  Works on a copy."""
    return _gtm(ls.copy(), get_caps(caps))


def _gtm(ls, caps):
    if not ls.pre_process():
        return None
    if ls.g.n == 0:
        return []
    if ls.all_singleton():
        return _checked(ls)
    x = next(v for v in range(ls.g.n) if ls.list_size(v) > 1)
    vals = ls.unary_set(x)
    last = vals[0]
    for a in vals:
        for b in vals:
            if b == a:
                continue
            work = ls.copy()
            clean_up(work, x, a, b)
            try:
                # a branch that broke the elimination premise shows up as
                # an invariant error; that only disqualifies the branch
                r = solver.maltsev_solve(work, caps=caps)
            except InvariantViolation:
                r = None
            if r is not None:
                return r
            last = a
    return _gtm(ls.restrict({x: last}), caps)


def make_rectangle(ls, x, a, b):
    """Removes L-shaped leftovers over (x; a, b) until every other vertex
    sees the two rows equal or disjoint.  When (p,c),(p,d),(q,d) are
    listed at y but (q,c) is not, (p,c) goes; re-closes after each
    removal.  Mutates ls; False when a list empties."""
    n = ls.g.n
    while True:
        fired = False
        for y in range(n):
            if y == x:
                continue
            for p, q in ((a, b), (b, a)):
                pb = ls.value_bit(x, p)
                qb = ls.value_bit(x, q)
                while True:
                    rp = int(ls.P[x, y, pb])
                    rq = int(ls.P[x, y, qb])
                    lone = rp & ~rq
                    if not (rp & rq) or not lone:
                        break
                    i = (lone & -lone).bit_length() - 1
                    ls.remove_pair(x, p, y, int(ls.dom[y][i]))
                    fired = True
                    if not ls.pre_process(seeds=[(x, y)]):
                        return False
        if not fired:
            return True


def region_g_xab(ls, x, a, b):
    """Vertices whose whole list pairs with a but never with b, plus x
    itself; second result is the outside neighbourhood."""
    ab = ls.value_bit(x, a)
    bb = ls.value_bit(x, b)
    region = {x}
    for y in range(ls.g.n):
        if y == x:
            continue
        u = int(ls.unary[y])
        if u & ~int(ls.P[x, y, ab]) == 0 and u & int(ls.P[x, y, bb]) == 0:
            region.add(y)
    bnd = sorted({w for v in region for w in ls.g.neighbours(v)} - region)
    return sorted(region), bnd


def _rect_pairs(ls, x, ab, bb, y):
    """Ordered (c, d), c != d, with {a,b} x {c,d} fully listed at y."""
    com = int(ls.P[x, y, ab]) & int(ls.P[x, y, bb])
    vals = [int(ls.dom[y][i]) for i in _bits_of(com)]
    return [(c, d) for c in vals for d in vals if c != d]


def _have_rect(ls, x, a, b, y, c, d):
    return (ls.has_pair(x, a, y, c) and ls.has_pair(x, b, y, c)
            and ls.has_pair(x, a, y, d) and ls.has_pair(x, b, y, d))


def _meet(g, x, y, z):
    """Deepest shared vertex of the tree paths x->y and x->z in a BFS
    tree rooted at x (underlying undirected adjacency)."""
    par = {x: x}
    dq = deque([x])
    while dq:
        u = dq.popleft()
        for w in g.neighbours(u):
            if w not in par:
                par[w] = u
                dq.append(w)

    def path(t):
        if t not in par:
            return [x]
        out = [t]
        while out[-1] != x:
            out.append(par[out[-1]])
        out.reverse()
        return out

    py, pz = path(y), path(z)
    v = x
    for i in range(min(len(py), len(pz))):
        if py[i] != pz[i]:
            break
        v = py[i]
    return v


def _via(ls, x, p, v, z, w):
    """Some value at v listed with p at x and with w at z."""
    row = int(ls.P[x, v, ls.value_bit(x, p)])
    wb = ls.value_bit(z, w)
    for i in _bits_of(row):
        if (int(ls.P[v, z, i]) >> wb) & 1:
            return True
    return False


def _guard3(sub, x, p, v, y, c, z, e, neg):
    """Some value i at v with (p,i) listed at (x,v), (i,c) listed at
    (v,y), and (i,e) listed / not listed (neg) at (v,z)."""
    if sub is None:
        return True  # pin died; treat the guard as satisfied, remove nothing
    row = int(sub.P[x, v, sub.value_bit(x, p)])
    cb = sub.value_bit(y, c)
    eb = sub.value_bit(z, e)
    for i in _bits_of(row):
        if not (int(sub.P[v, y, i]) >> cb) & 1:
            continue
        hit = (int(sub.P[v, z, i]) >> eb) & 1
        if (not hit) if neg else hit:
            return True
    return False


def clean_up(ls, x0, a0, b0):
    """Propagates rectangle repairs outward from (x0; a0, b0).

    Work items (x, a, b) are rectangle-cleaned; then every ordered
    boundary pair (y, z) of the region of (x; a, b) is checked through
    the meet vertex v of the tree paths to y and z, and pair values whose
    support pattern at v cannot be completed are removed.  Mutates ls.
    """
    st = [(x0, a0, b0)]
    seen = set()
    while st:
        item = st.pop()
        if item in seen:
            continue
        seen.add(item)
        x, a, b = item
        if not (ls.has_value(x, a) and ls.has_value(x, b)):
            continue
        if not make_rectangle(ls, x, a, b):
            return ls
        if not (ls.has_value(x, a) and ls.has_value(x, b)):
            continue
        region, boundary = region_g_xab(ls, x, a, b)
        ab = ls.value_bit(x, a)
        bb = ls.value_bit(x, b)
        pins = {}

        def pin(val):
            if val not in pins:
                sub = ls.restrict({x: val})
                pins[val] = sub if sub.pre_process() else None
            return pins[val]

        for y in boundary:
            recty = _rect_pairs(ls, x, ab, bb, y)
            for cd in recty:
                st.append((y,) + cd)
            if not recty:
                continue
            for z in boundary:
                if z == y:
                    continue
                rectz = _rect_pairs(ls, x, ab, bb, z)
                if not rectz:
                    continue
                v = _meet(ls.g, x, y, z)
                for c, d in recty:
                    for e, l1 in rectz:
                        if not (ls.has_value(x, a) and ls.has_value(x, b)):
                            return ls
                        if not (_have_rect(ls, x, a, b, y, c, d)
                                and _have_rect(ls, x, a, b, z, e, l1)):
                            continue
                        if not (_via(ls, x, a, v, z, e)
                                and _via(ls, x, b, v, z, e)
                                and _via(ls, x, a, v, z, l1)
                                and _via(ls, x, b, v, z, l1)):
                            continue
                        # first pattern: anchored through the b-pin
                        if _guard3(pin(b), x, b, v, y, c, z, e, False):
                            if not _guard3(pin(a), x, a, v, z, e, y, d, True):
                                if not _drop(ls, x, a, b, y, d):
                                    return ls
                                pins.clear()
                            if not _guard3(pin(b), x, b, v, y, c, z, l1, True):
                                if not _drop(ls, x, a, b, z, l1):
                                    return ls
                                pins.clear()
                        # second pattern: anchored through the a-pin
                        if _guard3(pin(a), x, a, v, y, c, z, l1, False):
                            if not _guard3(pin(a), x, a, v, z, l1, y, d, True):
                                if not _drop(ls, x, a, b, y, d):
                                    return ls
                                pins.clear()
                            if not _guard3(pin(a), x, a, v, y, c, z, l1, True):
                                if not _drop(ls, x, a, b, z, l1):
                                    return ls
                                pins.clear()
    return ls


def _drop(ls, x, a, b, y, w):
    """Removes (a,w) and (b,w) from the (x,y) pair list and re-closes."""
    changed = False
    for p in (a, b):
        if ls.has_pair(x, p, y, w):
            ls.remove_pair(x, p, y, w)
            changed = True
    if changed and not ls.pre_process(seeds=[(x, y)]):
        return False
    return True


# -- answer extraction ----------------------------------------------------


def recognize_weaknu(s, caps=None):
    """(answer, operation or None) for the Siggers question on s.

    The operation, when present, is a 4-ary table with
    f(a,r,e,a) == f(r,a,r,e) that every relation of s tolerates; it is
    re-verified before being returned.
    """
    caps = get_caps(caps)
    det = build_detection_instance(s, caps=caps)
    hom = _weak_nu(det.lists.copy(), caps, 0)
    if hom is None:
        return False, None
    return True, _extract_op(s, det, hom)


def _extract_op(s, det, hom):
    n = s.domain_size
    covered = {}
    for gi, (l, quad) in enumerate(det.quads):
        part = det.hypergraph.parts[l]
        tau = det.hlabel[hom[gi]][1]
        rows = [part[q] for q in quad]
        for i in range(len(tau)):
            cell = (rows[0][i], rows[1][i], rows[2][i], rows[3][i])
            old = covered.get(cell)
            if old is not None and old != tau[i]:
                raise InvariantViolation(
                    "extracted table is not single-valued at %r" % (cell,))
            covered[cell] = tau[i]

    uf = _UF(n ** 4)

    def cidx(q):
        return ((q[0] * n + q[1]) * n + q[2]) * n + q[3]

    for a in range(n):
        for r in range(n):
            for e in range(n):
                uf.union(cidx((a, r, e, a)), cidx((r, a, r, e)))
    rv = {}
    for cell, val in covered.items():
        root = uf.find(cidx(cell))
        if root in rv and rv[root] != val:
            raise InvariantViolation(
                "extracted table breaks the identity at %r" % (cell,))
        rv[root] = val
    table = np.zeros(n ** 4, dtype=np.int64)
    for idx in range(n ** 4):
        root = uf.find(idx)
        if root not in rv:
            # free cell: relation rows never read it, any value works
            rv[root] = idx // n ** 3
        table[idx] = rv[root]
    op = OpTable(n, 4, table)
    ok, wit = is_polymorphism(op, s)
    if not ok:
        raise InvariantViolation("recovered operation fails on %r" % (wit,))
    ok, wit = check_property(op, "siggers")
    if not ok:
        raise InvariantViolation("recovered operation fails on %r" % (wit,))
    return op
