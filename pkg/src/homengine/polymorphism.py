"""Operations on H: tables, identity checks, listed lifts, brute search.

An OpTable is a k-ary operation on {0..n-1} stored flat, leftmost argument
most significant.  A ListedPolymorphism attaches an operation to a list
system: one operation per G-vertex, realized as a shared base table plus a
(normally empty) per-vertex override map, applied to H-values from that
vertex's list.
"""

import itertools

import numpy as np

from .caps import get_caps
from .digraph import Digraph
from .errors import CapExceeded, InvalidInput

PROPERTIES = ("weaknu", "nu", "siggers", "maltsev", "majority",
              "semilattice", "idempotent")


class OpTable:
    """k-ary operation on {0..n-1}; table flat, first argument most significant."""

    def __init__(self, domain, arity, table):
        self.domain = int(domain)
        self.arity = int(arity)
        t = np.asarray(table, dtype=np.int64)
        if t.shape != (self.domain ** self.arity,):
            raise InvalidInput("operation table has wrong length")
        if t.size and (t.min() < 0 or t.max() >= self.domain):
            raise InvalidInput("operation table value outside the domain")
        self.table = t

    def apply(self, args):
        if len(args) != self.arity:
            raise InvalidInput("expected %d arguments" % self.arity)
        idx = 0
        for a in args:
            idx = idx * self.domain + int(a)
        return int(self.table[idx])

    def apply_vec(self, cols):
        idx = np.zeros_like(np.asarray(cols[0], dtype=np.int64))
        for c in cols:
            idx = idx * self.domain + np.asarray(c, dtype=np.int64)
        return self.table[idx]

    def to_json(self):
        return {"domain": self.domain, "arity": self.arity,
                "table": self.table.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["domain"], obj["arity"], obj["table"])

    def __eq__(self, other):
        return (isinstance(other, OpTable) and self.domain == other.domain
                and self.arity == other.arity
                and np.array_equal(self.table, other.table))


def check_property(op, prop):
    """Does op satisfy the named identity bundle?  (ok, witness-or-None).

    weaknu: idempotent and all one-deviant patterns agree.
    nu: one-deviant patterns evaluate to the repeated value.
    siggers: f(a,r,e,a) == f(r,a,r,e); idempotence NOT required.
    maltsev: f(a,b,b) == f(b,b,a) == a.
    majority / semilattice / idempotent: the usual equations.
    """
    n, k = op.domain, op.arity
    if prop == "idempotent":
        for a in range(n):
            if op.apply((a,) * k) != a:
                return False, ("idempotence", a)
        return True, None
    if prop == "weaknu":
        ok, w = check_property(op, "idempotent")
        if not ok:
            return False, w
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                vals = set()
                for pos in range(k):
                    args = [a] * k
                    args[pos] = b
                    vals.add(op.apply(args))
                if len(vals) > 1:
                    return False, ("one-deviant disagreement", a, b)
        return True, None
    if prop == "nu":
        for a in range(n):
            for b in range(n):
                for pos in range(k):
                    args = [a] * k
                    args[pos] = b
                    if op.apply(args) != a:
                        return False, ("near-unanimity", a, b, pos)
        return True, None
    if prop == "siggers":
        if k != 4:
            return False, ("arity", k)
        for a in range(n):
            for r in range(n):
                for e in range(n):
                    if op.apply((a, r, e, a)) != op.apply((r, a, r, e)):
                        return False, ("siggers", a, r, e)
        return True, None
    if prop == "maltsev":
        if k != 3:
            return False, ("arity", k)
        for a in range(n):
            for b in range(n):
                if op.apply((a, b, b)) != a or op.apply((b, b, a)) != a:
                    return False, ("maltsev", a, b)
        return True, None
    if prop == "majority":
        if k != 3:
            return False, ("arity", k)
        for a in range(n):
            for b in range(n):
                if (op.apply((a, a, b)) != a or op.apply((a, b, a)) != a
                        or op.apply((b, a, a)) != a):
                    return False, ("majority", a, b)
        return True, None
    if prop == "semilattice":
        if k != 2:
            return False, ("arity", k)
        for a in range(n):
            if op.apply((a, a)) != a:
                return False, ("idempotence", a)
            for b in range(n):
                if op.apply((a, b)) != op.apply((b, a)):
                    return False, ("commutativity", a, b)
                for c in range(n):
                    lhs = op.apply((op.apply((a, b)), c))
                    rhs = op.apply((a, op.apply((b, c))))
                    if lhs != rhs:
                        return False, ("associativity", a, b, c)
        return True, None
    raise InvalidInput("unknown property %r" % (prop,))


def _relations_of(target):
    if isinstance(target, Digraph):
        return target.n, [(2, [tuple(a) for a in target.arcs])]
    if hasattr(target, "domain_size") and hasattr(target, "relations"):
        return target.domain_size, [(r.arity, [tuple(t) for t in r.tuples])
                                    for r in target.relations]
    raise InvalidInput("expected a Digraph or a relational structure")


def is_polymorphism(op, target):
    """Does op preserve every relation of the target?  (ok, witness)."""
    n, rels = _relations_of(target)
    if n != op.domain:
        return False, ("domain mismatch", n, op.domain)
    k = op.arity
    for ri, (r, tuples) in enumerate(rels):
        m = len(tuples)
        if m == 0:
            continue
        tarr = np.array(tuples, dtype=np.int64)          # (m, r)
        # encode rows in mixed radix so membership is one np.isin per block
        # (falls back to a python set when n**r would overflow int64)
        weights = None
        if n ** r < 2 ** 62:
            weights = n ** np.arange(r - 1, -1, -1, dtype=np.int64)
            tenc = tarr @ weights
        else:
            tset = set(tuple(t) for t in tuples)
        # iterate k-tuples of relation rows; outer python loop keeps the
        # vectorized block at most m^2 rows
        outer = max(0, k - 2)
        inner = k - outer
        if inner == 2:
            ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
            ii = ii.ravel()
            jj = jj.ravel()
        else:
            ii = np.arange(m)
            jj = None
        for head in itertools.product(range(m), repeat=outer):
            cols = []
            for c in range(r):
                parts = [np.full(ii.shape, tarr[h, c], dtype=np.int64)
                         for h in head]
                parts.append(tarr[ii, c])
                if jj is not None:
                    parts.append(tarr[jj, c])
                cols.append(parts)
            imgs = []
            for c in range(r):
                imgs.append(op.apply_vec(cols[c]))
            img = np.stack(imgs, axis=1)
            if weights is not None:
                bad = ~np.isin(img @ weights, tenc)
                if bad.any():
                    row = img[int(np.flatnonzero(bad)[0])]
                    return False, ("relation", ri, tuple(int(v) for v in row))
            else:
                for row in img:
                    if tuple(int(v) for v in row) not in tset:
                        return False, ("relation", ri,
                                       tuple(int(v) for v in row))
    return True, None


class _UF:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)


def _cell(args, n):
    idx = 0
    for a in args:
        idx = idx * n + a
    return idx


def brute_force_find_op(target, arity, prop, caps=None):
    """Exhaustive search for a k-ary operation with the given property that
    preserves every relation of the target.  Identities become forced cells
    and tied cell classes up front; preservation constraints are checked as
    soon as their cells are decided.  Returns an OpTable or None; raises
    CapExceeded past the configured domain/node limits.
    """
    caps = get_caps(caps)
    n, rels = _relations_of(target)
    k = int(arity)
    limit_key = "find_op_domain_arity%d" % k
    if limit_key in caps and n > caps[limit_key]:
        raise CapExceeded(limit_key, caps[limit_key], n)
    if prop == "semilattice":
        raise InvalidInput("semilattice search is not supported")
    if prop in ("siggers",) and k != 4:
        raise InvalidInput("siggers needs arity 4")
    if prop in ("maltsev", "majority") and k != 3:
        raise InvalidInput("%s needs arity 3" % prop)

    N = n ** k
    uf = _UF(N)
    forced = {}

    def force(cell, val):
        root = uf.find(cell)
        if root in forced and forced[root] != val:
            return False
        forced[root] = val
        return True

    consistent = True
    if prop in ("weaknu", "nu", "idempotent", "maltsev", "majority"):
        for a in range(n):
            consistent &= force(_cell((a,) * k, n), a)
    if prop == "weaknu":
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                cells = []
                for pos in range(k):
                    args = [a] * k
                    args[pos] = b
                    cells.append(_cell(args, n))
                for c in cells[1:]:
                    uf.union(cells[0], c)
    elif prop == "nu":
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                for pos in range(k):
                    args = [a] * k
                    args[pos] = b
                    consistent &= force(_cell(args, n), a)
    elif prop == "siggers":
        for a in range(n):
            for r in range(n):
                for e in range(n):
                    uf.union(_cell((a, r, e, a), n), _cell((r, a, r, e), n))
    elif prop == "maltsev":
        for a in range(n):
            for b in range(n):
                consistent &= force(_cell((a, b, b), n), a)
                consistent &= force(_cell((b, b, a), n), a)
    elif prop == "majority":
        for a in range(n):
            for b in range(n):
                consistent &= force(_cell((a, a, b), n), a)
                consistent &= force(_cell((a, b, a), n), a)
                consistent &= force(_cell((b, a, a), n), a)
    elif prop == "idempotent":
        pass
    else:
        raise InvalidInput("unknown property %r" % (prop,))
    # re-fold forcing through unions made after the values were recorded
    folded = {}
    for root, val in list(forced.items()):
        r = uf.find(root)
        if r in folded and folded[r] != val:
            consistent = False
        folded[r] = val
    forced = folded
    if not consistent:
        return None

    # preservation constraints: each is (class list, allowed tuple set)
    constraints = []
    for (r, tuples) in rels:
        m = len(tuples)
        if m == 0:
            continue
        tset = set(tuple(t) for t in tuples)
        for combo in itertools.product(range(m), repeat=k):
            classes = []
            for c in range(r):
                args = tuple(tuples[t][c] for t in combo)
                classes.append(uf.find(_cell(args, n)))
            constraints.append((classes, tset))

    roots = sorted(set(uf.find(i) for i in range(N)))
    root_pos = {r: i for i, r in enumerate(roots)}
    values = [-1] * len(roots)
    for r, val in forced.items():
        values[root_pos[uf.find(r)]] = val

    watch = [[] for _ in roots]
    missing = []
    for ci, (classes, tset) in enumerate(constraints):
        undecided = set(cl for cl in classes if values[root_pos[cl]] < 0)
        missing.append(len(undecided))
        for cl in undecided:
            watch[root_pos[cl]].append(ci)

    def check(ci):
        classes, tset = constraints[ci]
        out = tuple(values[root_pos[cl]] for cl in classes)
        return out in tset

    for ci, m in enumerate(missing):
        if m == 0 and not check(ci):
            return None

    free = [i for i, v in enumerate(values) if v < 0]
    budget = [caps["find_op_nodes"]]

    def rec2(pos):
        if pos == len(free):
            return True
        slot = free[pos]
        for val in range(n):
            budget[0] -= 1
            if budget[0] < 0:
                raise CapExceeded("find_op_nodes", caps["find_op_nodes"])
            values[slot] = val
            ok = True
            done = 0
            for ci in watch[slot]:
                missing[ci] -= 1
                done += 1
                if missing[ci] == 0 and not check(ci):
                    ok = False
                    break
            if ok and rec2(pos + 1):
                return True
            for ci in watch[slot][:done]:
                missing[ci] += 1
            values[slot] = -1
        return False

    if not rec2(0):
        return None
    table = np.empty(N, dtype=np.int64)
    for i in range(N):
        table[i] = values[root_pos[uf.find(i)]]
    return OpTable(n, k, table)


class ListedPolymorphism:
    """Per-vertex operations over a list system: base table + overrides."""

    def __init__(self, op, overrides=None):
        self.op = op
        self.arity = op.arity
        self.overrides = dict(overrides or {})

    def apply(self, x, args):
        key = (x, tuple(int(a) for a in args))
        if key in self.overrides:
            return self.overrides[key]
        return self.op.apply(args)

    def validate(self, ls, max_checks=10 ** 7):
        """Closure of every list under f(x; .) and the adjacency property on
        listed arc tuples.  Returns a list of violation descriptions
        (empty means valid).  Exhaustive; guarded by max_checks.
        """
        k = self.arity
        g, h = ls.g, ls.h
        viol = []
        budget = max_checks
        for x in range(g.n):
            lx = ls.unary_set(x)
            budget -= len(lx) ** k
            if budget < 0:
                raise CapExceeded("validate_checks", max_checks)
            for args in itertools.product(lx, repeat=k):
                if self.apply(x, args) not in set(lx):
                    viol.append(("closure", x, args))
        for (x, y) in g.arcs:
            lx = ls.unary_set(x)
            ly = set(ls.unary_set(y))
            outs = {a: [b for b in h.out[a] if b in ly] for a in set(lx)}
            for args in itertools.product(lx, repeat=k):
                partner_lists = [outs[a] for a in args]
                count = 1
                for p in partner_lists:
                    count *= len(p)
                    if count == 0:
                        break
                budget -= count
                if budget < 0:
                    raise CapExceeded("validate_checks", max_checks)
                fx = self.apply(x, args)
                for brgs in itertools.product(*partner_lists):
                    fy = self.apply(y, brgs)
                    if not h.has_arc(fx, fy):
                        viol.append(("adjacency", (x, y), args, brgs))
        return viol


def lift_to_lists(op, ls=None):
    """Base lift: the same table at every vertex, no overrides."""
    return ListedPolymorphism(op)


def minority_pair(f, x, b, a):
    """f(x; b,..,b,a) == a -- is (b,a) a minority pattern at x?"""
    k = f.arity
    return f.apply(x, (b,) * (k - 1) + (a,)) == a


def f_closure(f, x, values):
    """Closure of a value set under all applications of f(x; .)."""
    cur = set(int(v) for v in values)
    k = f.arity
    while True:
        new = set()
        for args in itertools.product(sorted(cur), repeat=k):
            v = f.apply(x, args)
            if v not in cur:
                new.add(v)
        if not new:
            return cur
        cur |= new


def induce_maltsev(f, ls=None):
    """h(a,b,c) = f(a, b,..,b, c).  When a list system is supplied, checks
    the Maltsev identities on every list and raises on a violation."""
    op = f.op
    n = op.domain
    k = f.arity
    if k < 3:
        raise InvalidInput("inducing Maltsev needs arity >= 3")
    table = np.empty(n ** 3, dtype=np.int64)
    for a in range(n):
        for b in range(n):
            for c in range(n):
                args = (a,) + (b,) * (k - 2) + (c,)
                table[(a * n + b) * n + c] = op.apply(args)
    h = OpTable(n, 3, table)
    ov = {}
    for (x, args), _v in f.overrides.items():
        a, c = args[0], args[-1]
        mids = set(args[1:-1])
        if len(mids) == 1:
            b = mids.pop()
            ov[(x, (a, b, c))] = f.apply(x, args)
    lf = ListedPolymorphism(h, overrides=ov)
    if ls is not None:
        from .errors import InvariantViolation
        for x in range(ls.g.n):
            lx = ls.unary_set(x)
            for a in lx:
                for b in lx:
                    if lf.apply(x, (a, b, b)) != a or lf.apply(x, (b, b, a)) != a:
                        raise InvariantViolation(
                            "induced operation is not Maltsev on the list of "
                            "vertex %d at (%d,%d)" % (x, a, b))
    return lf
