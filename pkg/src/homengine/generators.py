"""Instance builders.

A relation of arity k over a small domain becomes a balanced digraph H:
one low hub per element, one high hub per tuple, and an oriented path
between every hub pair whose piece pattern records coordinate agreement
(straight where they agree, a zig-zag dip where they differ).  A weak NU
operation phi on the domain lifts to an operation psi on V(H), built here
and validated before anything is returned.

Input graphs G come from bipartite templates: variable and constraint
vertices joined by height-(k+2) walk patterns that read one coordinate
each (straight at the read position, zig-zag elsewhere, so a constraint
vertex's tuple must agree with the variable's value exactly there).

Also: apex joins of balanced digraphs, seeded random families, and the
bundled showcase instance used by the CLI demo and the test-suite.
"""

import random

import numpy as np

from .digraph import Digraph, OrientedWalk, levels
from .errors import CapExceeded, InvalidInput
from .polymorphism import OpTable, check_property, is_polymorphism, \
    brute_force_find_op


class ZigZagSpec:
    """Piece pattern of the path between element a and tuple alpha.

    pieces[p] for p in 0..k+1 is "F" (forward arc) or "Z"
    (forward-backward-forward); pieces 0 and k+1 are always "F", piece p
    (1 <= p <= k) is "F" iff a == alpha[p-1].
    """

    def __init__(self, a, alpha, pieces):
        self.a = a
        self.alpha = tuple(alpha)
        self.pieces = tuple(pieces)

    @property
    def arity(self):
        return len(self.pieces) - 2

    @property
    def height(self):
        return len(self.pieces)

    def walk(self):
        steps = []
        for p in self.pieces:
            steps.extend((1,) if p == "F" else (1, -1, 1))
        return OrientedWalk(steps)


def zigzag_path(a, alpha):
    alpha = tuple(int(c) for c in alpha)
    pieces = ["F"]
    for c in alpha:
        pieces.append("F" if c == int(a) else "Z")
    pieces.append("F")
    return ZigZagSpec(a, alpha, pieces)


def coord_read_walk(arity, coord):
    """Walk pattern a template edge uses to read one tuple coordinate.

    Straight at the read position (forcing piece equality there), zig-zag
    at every other coordinate (compatible with anything).  coord=0 reads
    nothing: zig-zag everywhere, every (element, tuple) pair allowed.
    """
    k = int(arity)
    if not 0 <= coord <= k:
        raise InvalidInput("coordinate %r out of range for arity %d"
                           % (coord, k))
    steps = [1]
    for r in range(1, k + 1):
        steps.extend((1,) if r == coord else (1, -1, 1))
    steps.append(1)
    return OrientedWalk(steps)


class GadgetDigraph:
    """H plus the bookkeeping psi needs: hub ids, per-path vertex maps,
    levels, and per-vertex membership (path, piece, kind)."""

    def __init__(self, h, elements, tuples, b, beta, lvl, membership,
                 joint, upper, lower):
        self.h = h
        self.elements = elements
        self.tuples = tuples
        self.b = b
        self.beta = beta
        self.levels = lvl
        self.membership = membership
        self._joint = joint
        self._upper = upper
        self._lower = lower

    @property
    def arity(self):
        return len(self.tuples[0]) if self.tuples else 0


def _tuple_closure_table(tuples, phi):
    """TT[i,j,l] = index of coordinate-wise phi; raises if R is not closed."""
    m = len(tuples)
    index = {t: i for i, t in enumerate(tuples)}
    TT = np.empty((m, m, m), dtype=np.int64)
    for i, ti in enumerate(tuples):
        for j, tj in enumerate(tuples):
            for l, tl in enumerate(tuples):
                out = tuple(phi.apply((a, b, c))
                            for a, b, c in zip(ti, tj, tl))
                if out not in index:
                    raise InvalidInput(
                        "relation is not closed under the operation: "
                        "%r applied to rows %d,%d,%d leaves the relation"
                        % (out, i, j, l))
                TT[i, j, l] = index[out]
    return TT


def build_h_from_relation(rel, phi, element_labels=None, tuple_labels=None):
    """(GadgetDigraph, psi).  rel: a one-relation structure or a plain
    list of tuples (domain then comes from phi).  phi must be a weak NU
    operation of arity 3 on the domain preserving the relation; psi is
    validated as a weak NU polymorphism of H before returning.
    """
    if hasattr(rel, "relations"):
        if len(rel.relations) != 1:
            raise InvalidInput("gadget construction wants a single relation")
        n = rel.domain_size
        tuples = [tuple(t) for t in rel.relations[0].tuples]
    else:
        n = phi.domain
        tuples = [tuple(t) for t in rel]
    tuples = sorted(set(tuples))
    if not tuples:
        raise InvalidInput("empty relation")
    k = len(tuples[0])
    if any(len(t) != k for t in tuples):
        raise InvalidInput("tuples must share one arity")
    if any(not (0 <= c < n) for t in tuples for c in t):
        raise InvalidInput("tuple entry out of domain")
    if phi.arity != 3 or phi.domain != n:
        raise InvalidInput("need an arity-3 operation on the domain")
    ok, wit = check_property(phi, "weaknu")
    if not ok:
        raise InvalidInput("operation is not weak NU: %r" % (wit,))
    m = len(tuples)
    TT = _tuple_closure_table(tuples, phi)

    if element_labels is None:
        element_labels = [str(a) for a in range(n)]
    if tuple_labels is None:
        tuple_labels = ["r%d" % j for j in range(m)]

    b = list(range(n))
    beta = [n + j for j in range(m)]
    labels = list(element_labels) + list(tuple_labels)
    nid = n + m
    arcs = []
    lvl = [0] * n + [k + 2] * m
    membership = {}
    joint = np.full((n, m, k + 3), -1, dtype=np.int64)
    upper = np.full((n, m, k + 3), -1, dtype=np.int64)
    lower = np.full((n, m, k + 3), -1, dtype=np.int64)
    for i in range(n):
        for j in range(m):
            spec = zigzag_path(i, tuples[j])
            joint[i, j, 0] = b[i]
            joint[i, j, k + 2] = beta[j]
            cur = b[i]
            for p, kind in enumerate(spec.pieces, start=1):
                last = p == k + 2
                if last:
                    end = beta[j]
                else:
                    end = nid
                    nid += 1
                    labels.append("p%d.%d.%d" % (i, j, p))
                    lvl.append(p)
                    membership[end] = (i, j, p, "joint")
                    joint[i, j, p] = end
                if kind == "F":
                    arcs.append((cur, end))
                else:
                    u = nid
                    nid += 1
                    labels.append("u%d.%d.%d" % (i, j, p))
                    lvl.append(p)
                    membership[u] = (i, j, p, "upper")
                    upper[i, j, p] = u
                    d = nid
                    nid += 1
                    labels.append("d%d.%d.%d" % (i, j, p))
                    lvl.append(p - 1)
                    membership[d] = (i, j, p, "lower")
                    lower[i, j, p] = d
                    arcs.append((cur, u))
                    arcs.append((d, u))
                    arcs.append((d, end))
                cur = end
    h = Digraph(nid, arcs, labels)
    gd = GadgetDigraph(h, list(range(n)), tuples, b, beta, lvl, membership,
                       joint, upper, lower)
    psi = _build_psi(gd, phi, TT)
    ok, wit = is_polymorphism(psi, h)
    if not ok:
        raise InvalidInput("derived operation does not preserve the "
                           "gadget arcs: %r" % (wit,))
    ok, wit = check_property(psi, "weaknu")
    if not ok:
        raise InvalidInput("derived operation is not weak NU: %r" % (wit,))
    return gd, psi


def _build_psi(gd, phi, TT):
    """The lifted arity-3 operation on V(H).

    Hubs map through phi (elements coordinate-wise for tuple hubs).  A
    same-level interior triple maps onto the path selected by phi, keeping
    the level; an upper-internal argument pulls the result onto the target
    piece's upper internal when that piece zig-zags (joint otherwise), a
    lower-internal argument onto the next piece's lower internal likewise;
    a triple from one single path takes the majority.  Arguments on
    different levels: the first argument of the equal-level pair (first
    argument when all levels differ) -- level-equivariant, so still
    arc-compatible.
    """
    h = gd.h
    n = len(gd.elements)
    m = len(gd.tuples)
    N = h.n
    k = gd.arity
    lvl = np.array(gd.levels, dtype=np.int64)
    pi = np.full(N, -1, dtype=np.int64)
    pj = np.full(N, -1, dtype=np.int64)
    typ = np.zeros(N, dtype=np.int64)  # 0 joint, 1 upper, 2 lower, 3 hub
    for v, (i, j, p, kind) in gd.membership.items():
        pi[v] = i
        pj[v] = j
        typ[v] = {"joint": 0, "upper": 1, "lower": 2}[kind]
    typ[: n + m] = 3
    ph = np.empty((n, n, n), dtype=np.int64)
    for a in range(n):
        for bb in range(n):
            for c in range(n):
                ph[a, bb, c] = phi.apply((a, bb, c))

    table = np.empty(N * N * N, dtype=np.int64)
    B = np.repeat(np.arange(N), N)
    C = np.tile(np.arange(N), N)
    lB, lC = lvl[B], lvl[C]
    piB, piC = pi[B], pi[C]
    pjB, pjC = pj[B], pj[C]
    tB, tC = typ[B], typ[C]
    for a in range(N):
        la = int(lvl[a])
        eq12 = lB == la
        eq13 = lC == la
        eq23 = lB == lC
        out = np.where(eq23 & ~(eq12 | eq13), B, a)
        same = eq12 & eq13
        if la == 0:
            out[same] = ph[a, B[same], C[same]]
        elif la == k + 2:
            out[same] = TT[a - n, B[same] - n, C[same] - n] + n
        else:
            sm = same
            s = ph[pi[a], piB[sm], piC[sm]]
            s2 = TT[pj[a], pjB[sm], pjC[sm]]
            J = gd._joint[s, s2, la]
            res = J
            D = gd._lower[s, s2, la + 1]
            anyD = (typ[a] == 2) | (tB[sm] == 2) | (tC[sm] == 2)
            res = np.where(anyD & (D >= 0), D, res)
            U = gd._upper[s, s2, la]
            anyU = (typ[a] == 1) | (tB[sm] == 1) | (tC[sm] == 1)
            res = np.where(anyU & (U >= 0), U, res)
            onepath = (piB[sm] == pi[a]) & (piC[sm] == pi[a]) & \
                (pjB[sm] == pj[a]) & (pjC[sm] == pj[a])
            maj = np.where((B[sm] == a) | (C[sm] == a), a, B[sm])
            res = np.where(onepath, maj, res)
            out[sm] = res
        table[a * N * N:(a + 1) * N * N] = out
    return OpTable(N, 3, table)


def build_g_from_template(template, path_patterns, assignment):
    """Replace each template arc by a fresh copy of its walk pattern.

    assignment maps an arc (u, v) to an index into path_patterns.  The
    result must be balanced (walk nets have to compose consistently around
    template cycles), otherwise the construction errors out.
    """
    nid = template.n
    labeled = template.labels is not None
    labels = list(template.labels) if labeled else None
    arcs = []
    for arc in template.arcs:
        if arc not in assignment:
            raise InvalidInput("template arc %r has no pattern" % (arc,))
        walk = path_patterns[assignment[arc]]
        new_arcs, nid2 = walk.realize(arc[0], arc[1], nid)
        if labeled:
            for w in range(nid, nid2):
                labels.append("w%d" % w)
        nid = nid2
        arcs.extend(new_arcs)
    g = Digraph(nid, arcs, labels)
    if levels(g) is None:
        raise InvalidInput("pattern heights are inconsistent: the "
                           "assembled graph is not balanced")
    return g


def apex_join(parts):
    """One new bottom vertex with an arc to every level-0 vertex of every
    part; parts must each be balanced.  The result is balanced with one
    more level."""
    if not parts:
        raise InvalidInput("nothing to join")
    offs = [1]
    lvls = []
    for p in parts:
        lv = levels(p)
        if lv is None:
            raise InvalidInput("apex join needs balanced parts")
        lvls.append(lv)
        offs.append(offs[-1] + p.n)
    arcs = []
    labeled = all(p.labels is not None for p in parts)
    labels = ["apex"] if labeled else None
    for pidx, p in enumerate(parts):
        off = offs[pidx]
        arcs.extend((u + off, v + off) for (u, v) in p.arcs)
        arcs.extend((0, v + off) for v in range(p.n) if lvls[pidx][v] == 0)
        if labeled:
            labels.extend(p.labels)
    return Digraph(offs[-1], arcs, labels)


def random_family(seed, mode="digraph", **params):
    """Seeded (G, H, op) triples.

    digraph mode: a random small H (<= max_h vertices) that admits a weak
    3-NU found by exhaustive search, and a random G (<= max_g).  gadget
    mode: a random relation closed-search via retries, H/psi from the
    zig-zag construction, G from a random bipartite template.
    """
    rng = random.Random(seed)
    if mode == "digraph":
        max_h = int(params.get("max_h", 4))
        max_g = int(params.get("max_g", 12))
        retries = int(params.get("retries", 200))
        for _ in range(retries):
            nh = rng.randint(1, max_h)
            arcs = [(u, v) for u in range(nh) for v in range(nh)
                    if rng.random() < params.get("h_density", 0.45)]
            h = Digraph(nh, arcs)
            try:
                op = brute_force_find_op(h, 3, "weaknu")
            except CapExceeded:
                # refuting a dense target can blow the search budget;
                # that just makes it unusable here
                op = None
            if op is None:
                continue
            ng = rng.randint(1, max_g)
            garcs = [(u, v) for u in range(ng) for v in range(ng)
                     if rng.random() < params.get("g_density", 0.3)]
            return Digraph(ng, garcs), h, op
        raise InvalidInput("exhausted retries without a usable target")
    if mode != "gadget":
        raise InvalidInput("unknown family mode %r" % (mode,))
    domain = int(params.get("domain", 2))
    arity = int(params.get("arity", 3))
    ntuples = int(params.get("tuples", 3))
    nvars = int(params.get("template_vars", 3))
    ncons = int(params.get("template_edges", 3))
    retries = int(params.get("retries", 50))
    for _ in range(retries):
        pool = set()
        while len(pool) < min(ntuples, domain ** arity):
            pool.add(tuple(rng.randrange(domain) for _ in range(arity)))
        tuples = sorted(pool)
        phi = _find_relation_weaknu(domain, arity, tuples)
        if phi is None:
            continue
        gd, psi = build_h_from_relation(tuples, phi)
        tpl_arcs = []
        assign = {}
        patterns = [coord_read_walk(arity, r) for r in range(arity + 1)]
        for c in range(ncons):
            x = rng.randrange(nvars)
            arc = (x, nvars + c)
            tpl_arcs.append(arc)
            assign[arc] = rng.randint(1, arity)
        template = Digraph(nvars + ncons, tpl_arcs)
        g = build_g_from_template(template, patterns, assign)
        return g, gd.h, psi
    raise InvalidInput("exhausted retries without a closed relation")


def _find_relation_weaknu(domain, arity, tuples):
    class _Carrier:
        pass
    r = _Carrier()
    r.arity = arity
    r.tuples = [tuple(t) for t in tuples]
    s = _Carrier()
    s.domain_size = domain
    s.relations = [r]
    return brute_force_find_op(s, 3, "weaknu")


# -- the bundled showcase ------------------------------------------------


SHOWCASE_TUPLES = (
    (0, 0, 0, 1, 0),   # alpha
    (1, 1, 1, 0, 0),   # beta
    (1, 0, 1, 0, 1),   # gamma
    (0, 1, 0, 1, 1),   # sigma = alpha xor beta xor gamma
    (2, 2, 2, 2, 2),   # tau
)
SHOWCASE_TUPLE_LABELS = ("alpha", "beta", "gamma", "sigma", "tau")


def showcase_phi():
    """Weak NU on {0,1,2}: three-way xor on {0,1}, anything with a 2 is 2."""
    tbl = []
    for a in range(3):
        for b in range(3):
            for c in range(3):
                if 2 in (a, b, c):
                    tbl.append(2)
                else:
                    tbl.append(a ^ b ^ c)
    return OpTable(3, 3, tbl)


SHOWCASE_TEMPLATE = (
    ("t1", (("x1", 5), ("x2", 2), ("x3", 1))),
    ("t2", (("x1", 5), ("x5", 2), ("x6", 3))),
    ("t3", (("x2", 2), ("x6", 3), ("x4", 5))),
    ("t4", (("x3", 4), ("x5", 2), ("x4", 5))),
)


class Showcase:
    """The bundled demo instance: g, h, phi (domain op), psi (lifted op),
    gadget bookkeeping, and label lookup for both sides."""

    def __init__(self, g, h, phi, psi, gadget):
        self.g = g
        self.h = h
        self.phi = phi
        self.psi = psi
        self.gadget = gadget

    def gv(self, label):
        return self.g.index_of(label)

    def hv(self, label):
        return self.h.index_of(label)

    def value_labels(self, values):
        return [self.h.labels[v] for v in values]


def showcase():
    """Two constraint blocks over a 5-ary relation, joined through a top
    vertex t0 that reads x1's coordinate-5 value on one side and is free
    on the other; the only homomorphisms send every variable to 2."""
    phi = showcase_phi()
    gd, psi = build_h_from_relation(
        SHOWCASE_TUPLES, phi,
        element_labels=("0", "1", "2"),
        tuple_labels=SHOWCASE_TUPLE_LABELS)

    names = []
    edges = []

    def _copy(suffix, t4_x3_coord):
        local = {}
        for v in ("x1", "x2", "x3", "x4", "x5", "x6"):
            local[v] = len(names)
            names.append(v + suffix)
        for t, reads in SHOWCASE_TEMPLATE:
            ti = len(names)
            names.append(t + suffix)
            for (x, coord) in reads:
                if t == "t4" and x == "x3":
                    coord = t4_x3_coord
                edges.append((local[x], ti, coord))
        return local

    plain = _copy("", 4)
    primed = _copy("'", 1)
    t0 = len(names)
    names.append("t0")
    edges.append((plain["x1"], t0, 5))
    edges.append((primed["x1"], t0, 0))

    template = Digraph(len(names), [(u, v) for (u, v, _) in edges], names)
    patterns = [coord_read_walk(5, r) for r in range(6)]
    assign = {(u, v): c for (u, v, c) in edges}
    g = build_g_from_template(template, patterns, assign)
    return Showcase(g, gd.h, phi, psi, gd)
