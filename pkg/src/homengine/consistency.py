"""Consistency passes over list systems.

preProcess is the (2,3)-closure: the support rule (every listed value has a
partner in every other pair list) plus the composition rule (pair lists
closed under relational composition through every third vertex), iterated
to a joint fixpoint.  arcConsistency is the weaker unary-only pass.
"""

import numpy as np

from . import _kernels as K
from .errors import InvalidInput


def arc_consistency(ls):
    """Prune unary lists to arc-consistency in place.  False iff a list dies."""
    g, h = ls.g, ls.h
    doms = [set(ls.unary_set(x)) for x in range(g.n)]
    out_sets = [set(h.out[a]) for a in range(h.n)]
    in_sets = [set(h.inn[a]) for a in range(h.n)]
    from collections import deque
    work = deque()
    for (u, v) in g.arcs:
        work.append((u, v, True))
        work.append((v, u, False))
    touched = set()
    while work:
        x, y, fwd = work.popleft()
        good = set()
        for a in doms[x]:
            partners = out_sets[a] if fwd else in_sets[a]
            if partners & doms[y]:
                good.add(a)
        if len(good) != len(doms[x]):
            doms[x] = good
            touched.add(x)
            if not good:
                break
            for (u, v) in g.arcs:
                if v == x:
                    work.append((u, x, True))
                if u == x:
                    work.append((v, x, False))
    for x in touched:
        m = np.uint64(0)
        for a in doms[x]:
            m |= np.uint64(1) << np.uint64(ls.value_bit(x, a))
        ls.unary[x] = ls.unary[x] & m
        ls.F[x, :] = 1
        ls.F[:, x] = 1
    if touched:
        K.normalize_rule_a(ls.P, ls.unary, ls.nd, ls.g.n)
    return all(int(ls.unary[x]) != 0 for x in range(g.n))


def pair_consistency(ls, seeds=None):
    """Run the pair fixpoint (support + composition rules).  In place."""
    return ls.pre_process(seeds=seeds)


def pre_process(ls, seeds=None):
    """Full preprocessing to the (2,3)-fixpoint.  False iff some list empties."""
    return ls.pre_process(seeds=seeds)


def gl_components(ls):
    """Weak components of the constrained product, as consistent sub-systems."""
    return ls.gl_components()


def minority_matrix(ls, f):
    """M[x,i,j] = 1 iff f(x; dom_x[i] repeated, dom_x[j]) == dom_x[j]."""
    n = ls.g.n
    mm = max(ls.mmax, 1)
    M = np.zeros((n, mm, mm), dtype=np.uint8)
    k = f.arity
    for x in range(n):
        d = ls.dom[x]
        for i in range(len(d)):
            a = int(d[i])
            for j in range(len(d)):
                b = int(d[j])
                args = (a,) * (k - 1) + (b,)
                if f.apply(x, args) == b:
                    M[x, i, j] = 1
    return M


def find_bi_clique(ls, f=None, M=None, resume=(0, 0, 0, 0)):
    """First (y, z, d1, d2, e1) with (d1,e1) and (d2,e1) both listed and --
    when an operation is supplied -- f(y; d2..d2, d1) != d1.  Values are
    H ids; None when no such tuple exists at or after the resume block.
    """
    if M is None:
        if f is None:
            raise InvalidInput("find_bi_clique needs an operation or its matrix")
        M = minority_matrix(ls, f)
        use_m = 1
    else:
        use_m = 1 if (f is not None or M is not None) else 0
    out = np.zeros(5, dtype=np.int64)
    hit = K.biclique_scan(ls.P, ls.unary, ls.nd, M, use_m, ls.g.n,
                          resume[0], resume[1], resume[2], resume[3], out)
    if not hit:
        return None
    y, z, d1, d2, e1 = (int(v) for v in out)
    return (y, z, int(ls.dom[y][d1]), int(ls.dom[y][d2]), int(ls.dom[z][e1]))
