"""List-homomorphism solver for targets with a weak near-unanimity operation.

The drive train: digraph_hom builds full lists, preprocesses to the
(2,3)-fixpoint and calls the not-minority routine.  That routine peels
singletons/components, and otherwise walks every (y, z, d1, d2, e1) with
(d1,e1),(d2,e1) both listed, builds the correlation sub-instance around
(y; d1, d2) anchored at (z, e1), and recurses on it; a failed test removes
(d1,e1).  When the loop settles, bi-clique pruning makes every surviving
list pair a minority pattern, and the induced Maltsev instance is solved by
value elimination over correlation regions.

The scan consumes provably inert tuples in bulk (see _kernels.notmin_scan);
nothing it skips could have changed any list, so the removal sequence is
exactly that of the plain nested loop.
"""

import numpy as np
from time import perf_counter as _ptime

from . import _kernels as K
from . import oracle
from .caps import get_caps
from .consistency import minority_matrix
from .digraph import weak_components
from .errors import InvalidInput, InvariantViolation
from .lists import ListSystem
from .polymorphism import (ListedPolymorphism, check_property, induce_maltsev,
                           is_polymorphism)


class SymDiffInstance:
    """Correlation sub-instance produced by sym_diff.

    lists: the packed sub-system (anchors pinned, other lists cut down to
    the supporters of d1 filtered through (z,e1)), preprocessed.
    order: sub id -> parent vertex id.  boundary: parent vertices adjacent
    to the region but not in it (never included).  anchors: (y, d1, z, e1)
    in parent/H ids.  consistent: False when some derived list was empty or
    preprocessing wiped the instance.
    """

    def __init__(self, lists, order, boundary, anchors, consistent, M=None,
                 tilde=None):
        self.lists = lists
        self.order = order
        self.boundary = boundary
        self.anchors = anchors
        self.consistent = consistent
        self.M = M
        self.tilde = tilde


class TestOutcome:
    """One sym-diff test: the tuple tried, whether it succeeded, and what
    was removed if it failed."""

    def __init__(self, y, d1, d2, z, e1, success):
        self.y = y
        self.d1 = d1
        self.d2 = d2
        self.z = z
        self.e1 = e1
        self.success = success


def verify(g, h, mapping, lists=None):
    """Total, arc-preserving, and inside the lists (pair lists too)."""
    if mapping is None or len(mapping) != g.n:
        return False
    for v in mapping:
        if v is None or not (0 <= int(v) < h.n):
            return False
    for (u, v) in g.arcs:
        if not h.has_arc(int(mapping[u]), int(mapping[v])):
            return False
    if lists is not None:
        for x in range(g.n):
            if not lists.has_value(x, int(mapping[x])):
                return False
        for x in range(g.n):
            for y in range(x + 1, g.n):
                if not lists.has_pair(x, int(mapping[x]), y, int(mapping[y])):
                    return False
    return True


def greedy_hom(ls, pins=None, stats=None):
    """Grow pinned value bits into a full hom of ls with the subset greedy
    kernel; (values, bits) verified against ls, or None.  ls is not
    touched."""
    n = ls.g.n
    su = ls.unary.copy()
    if pins:
        for v, b in pins.items():
            su[v] = su[v] & (np.uint64(1) << np.uint64(b))
    if not K.member_greedy(ls.P, ls.nd, su,
                           np.arange(n, dtype=np.int64), n):
        return None
    bits = np.array([int(su[v]).bit_length() - 1 for v in range(n)],
                    dtype=np.int64)
    vals = [int(ls.dom[v][bits[v]]) for v in range(n)]
    if verify(ls.g, ls.h, vals, ls):
        return vals, bits
    if stats is not None:
        stats["pool_fails"] += 1
    return None


def sac_batch(ls, state, y, d1b, su, trace=None):
    """One bulk removal pass for a freshly computed closure of (y, d1).
    Returns (count, instance dead).  Traced runs take the pair-at-a-time
    path so every removal stays visible."""
    n = ls.g.n
    if trace is None:
        out2 = np.zeros(1, dtype=np.int64)
        cnt = K.sac_prune(ls.P, ls.unary, ls.nd, ls.F, n, y, d1b, su,
                          state.EMPT, state.EMPTANY, out2)
        return cnt, bool(out2[0])
    d1 = int(ls.dom[y][d1b])
    cnt = 0
    for z in range(n):
        if z == y:
            continue
        kill = int(ls.P[y, z, d1b]) & ~int(su[z])
        while kill:
            e1b = (kill & -kill).bit_length() - 1
            kill &= kill - 1
            e1 = int(ls.dom[z][e1b])
            i, j, em_ab, em_ba = ls.remove_pair(y, d1, z, e1)
            trace({"event": "remove_pair", "phase": "symdiff",
                   "x": y, "a": d1, "y": z, "b": e1})
            cnt += 1
            if em_ab:
                state.note_emptied(y, z, i)
            if em_ba:
                state.note_emptied(z, y, j)
            if ls.pair_empty(y, z):
                return cnt, True
    return cnt, False


def build_sym_diff(ls, y, d1, d2, z, e1, members=None, M=None,
                   preprocess=True):
    """Construct the sym-diff sub-instance for (y; d1, d2) anchored (z, e1).

    Values are H ids.  members, when given, must be the correlation set
    (the caller-side scan already computed it); otherwise it is derived
    here: v belongs iff no value of v supports both d1 and d2 once the
    lists are filtered through (z, e1).  preprocess=False skips the
    consistency pass; consistent then only reflects nonempty lists.
    """
    n = ls.g.n
    d1b = ls.value_bit(y, d1)
    d2b = ls.value_bit(y, d2)
    e1b = ls.value_bit(z, e1)
    if y == z or d1 == d2:
        raise InvalidInput("sym_diff needs y != z and d1 != d2")
    if members is None:
        members = [y, z]
        for v in range(n):
            if v == y or v == z:
                continue
            t = ls.P[y, v, d1b] & ls.P[y, v, d2b] & ls.P[z, v, e1b]
            if int(t) == 0:
                members.append(v)
        members = sorted(members)
    sub, order = ls.induced(members)
    tilde = {}
    consistent = True
    parent_sum = 0
    sub_sum = 0
    for si, v in enumerate(order):
        parent_sum += int(ls.unary[v]).bit_count()
        if v == y:
            m = 1 << d1b
        elif v == z:
            m = 1 << e1b
        else:
            m = int(ls.P[y, v, d1b] & ls.P[z, v, e1b])
        tilde[v] = m
        sub.unary[si] = np.uint64(m)
        sub_sum += m.bit_count()
        if m == 0:
            consistent = False
    if not sub_sum < parent_sum:
        raise InvariantViolation("sym-diff instance did not shrink the lists")
    memset = set(order)
    boundary = sorted({w for v in order for w in ls.g.neighbours(v)} - memset)
    if consistent and preprocess:
        consistent = sub.pre_process()
    subM = None
    if M is not None:
        idx = np.array(order, dtype=np.int64)
        mm = max(int(sub.nd.max()), 1)
        subM = np.ascontiguousarray(M[idx][:, :mm, :mm])
    return SymDiffInstance(sub, order, boundary, (y, d1, z, e1), consistent,
                           M=subM, tilde=tilde)


class _ScanState:
    """Caches for one recursion node's sym-diff scan (see notmin_scan)."""

    K_ENTRIES = 64

    def __init__(self, ls):
        n = ls.g.n
        mm = max(ls.mmax, 1)
        KE = self.K_ENTRIES
        nw = (n + 63) // 64
        self.nw = nw
        self.Tc = np.zeros((mm, mm, n), np.uint64)
        self.Tv = np.zeros((mm, mm), np.uint8)
        self.WVl = np.zeros((mm, mm, n), np.int32)
        self.WVk = np.zeros((mm, mm, n), np.int8)
        self.WVc = np.zeros((mm, mm), np.int64)
        self.ES = np.zeros((mm, KE, nw), np.uint64)
        self.EN = np.zeros((mm, KE, nw), np.uint64)
        self.EL = np.zeros((mm, KE, n), np.uint64)
        self.ESl = np.zeros((mm, KE, n), np.int32)
        self.ESc = np.zeros((mm, KE), np.int64)
        self.ECNT = np.zeros(mm, np.int64)
        self.EGOOD = np.zeros((mm, KE, n), np.uint64)
        self.EGOODV = np.zeros((mm, KE, n), np.uint8)
        self.ECOV = np.full((mm, mm, KE), -1, np.int8)
        self.ER1 = np.full((mm, KE), -1, np.int8)
        self.EMPT = np.zeros((n, n), np.uint64)
        self.EMPTANY = np.zeros(n, np.uint64)
        self.ring = np.zeros(mm, np.int64)
        self.NBR = np.zeros((n, nw), np.uint64)
        for (u, v) in ls.g.arcs:
            if u != v:
                self.NBR[u, v >> 6] |= np.uint64(1) << np.uint64(v & 63)
                self.NBR[v, u >> 6] |= np.uint64(1) << np.uint64(u & 63)
        self.out_members = np.zeros(max(n, 1), np.int64)
        self.out_tuple = np.zeros(8, np.int64)

    def block_args(self):
        return (self.Tc, self.Tv, self.WVl, self.WVk, self.WVc,
                self.ES, self.EN, self.EL, self.ESl, self.ESc, self.ECNT,
                self.EGOOD, self.EGOODV, self.ECOV, self.ER1)

    def reset_block(self):
        self.Tv.fill(0)
        self.WVc.fill(0)
        self.ECNT.fill(0)
        self.ring.fill(0)
        self.ER1.fill(-1)
        self.ECOV.fill(-1)
        self.EGOODV.fill(0)

    def after_removal(self):
        # T rows involve P[y, .]; the memo list snapshots compare against
        # current P[y, v, d1] rows.  Goodness masks only read P[v, z, .]
        # with v != y, which a removal at (y, z_f) never touches.
        self.Tv.fill(0)
        self.ER1.fill(-1)

    def note_emptied(self, a, b, bit):
        self.EMPT[a, b] |= np.uint64(1) << np.uint64(bit)
        self.EMPTANY[a] |= np.uint64(1) << np.uint64(bit)

    def record_success_fast(self, d1b, marr, tarr):
        """Log a passed test for the skip memo: marr sorted member ids,
        tarr the witness value bits per member."""
        KE = self.K_ENTRIES
        slot = int(self.ring[d1b]) % KE
        self.ring[d1b] += 1
        self.ECNT[d1b] = min(int(self.ECNT[d1b]) + 1, KE)
        self.ES[d1b, slot, :] = 0
        self.EL[d1b, slot, :] = 0
        np.bitwise_or.at(self.ES[d1b, slot], marr >> 6,
                         np.uint64(1) << (marr & 63).astype(np.uint64))
        self.ESl[d1b, slot, :len(marr)] = marr
        self.EL[d1b, slot, marr] = tarr
        self.ESc[d1b, slot] = len(marr)
        self.EN[d1b, slot, :] = np.bitwise_or.reduce(self.NBR[marr], axis=0)
        self.EGOODV[d1b, slot, :] = 0
        self.ER1[d1b, slot] = -1
        self.ECOV[d1b, :, slot] = -1


class Solver:
    """Holds H, the weak-NU operation, caps, stats and trace hooks."""

    def __init__(self, h, f, caps=None, maltsev_backend="alg7", trace=None,
                 validate_op=True):
        self.h = h
        if f is None:
            if validate_op:
                raise InvalidInput("an operation is required")
            self.f = None
        elif isinstance(f, ListedPolymorphism):
            self.f = f
        else:
            self.f = ListedPolymorphism(f)
        self.caps = get_caps(caps)
        if maltsev_backend not in ("alg7", "oracle"):
            raise InvalidInput("unknown maltsev backend %r" % (maltsev_backend,))
        self.backend = maltsev_backend
        self.trace = trace
        self.stats = {"tests": 0, "removals": 0, "sac_removals": 0,
                      "biclique_removals": 0,
                      "max_depth": 0, "candidates": 0, "trivial_skips": 0,
                      "memo_skips": 0, "maltsev_tests": 0,
                      "pool_skips": 0, "pool_adds": 0, "pool_fails": 0}
        if validate_op:
            ok, wit = check_property(self.f.op, "weaknu")
            if not ok:
                raise InvalidInput("operation is not weak NU: %r" % (wit,))
            ok, wit = is_polymorphism(self.f.op, h)
            if not ok:
                raise InvalidInput("operation is not a polymorphism: %r" % (wit,))

    # -- public ------------------------------------------------------------

    def solve(self, g, lists=None):
        """Find a (list-)homomorphism g -> h or decide none exists."""
        if lists is None:
            ls = ListSystem.init_full(g, self.h, caps=self.caps)
        else:
            if lists.g is not g and lists.g.n != g.n:
                raise InvalidInput("lists were built for a different graph")
            ls = lists.copy()
        out = [None] * g.n
        for comp in weak_components(g):
            sub, order = ls.induced(comp)
            if not sub.pre_process():
                return None
            M = minority_matrix(sub, self.f)
            r = self._not_minority(sub, M, 0)
            if r is None:
                return None
            for v, a in zip(order, r):
                out[v] = a
        if not verify(g, self.h, out, lists):
            raise InvariantViolation("solver produced an invalid homomorphism")
        return out

    # -- not-minority ----------------------------------------------------

    def _not_minority(self, ls, M, depth):
        n = ls.g.n
        if depth > self.h.n:
            raise InvariantViolation("sym-diff recursion deeper than |V(H)|")
        if depth > self.stats["max_depth"]:
            self.stats["max_depth"] = depth
        if n == 0:
            return []
        if ls.all_singleton():
            return self._check_assignment(ls)
        comps = weak_components(ls.g)
        if len(comps) > 1:
            out = [None] * n
            for comp in comps:
                sub, order = ls.induced(comp)
                idx = np.array(order, dtype=np.int64)
                mm = max(int(sub.nd.max()), 1)
                subM = np.ascontiguousarray(M[idx][:, :mm, :mm])
                r = self._not_minority(sub, subM, depth)
                if r is None:
                    return None
                for v, a in zip(order, r):
                    out[v] = a
            return out
        _t = _ptime()
        pcomps = ls.gl_components()
        self.stats["t_gl"] = self.stats.get("t_gl", 0.0) + _ptime() - _t
        if not pcomps:
            return None
        if len(pcomps) > 1 or pcomps[0] is not ls:
            for sub in sorted(pcomps, key=lambda s: s.sum_sizes()):
                r = self._not_minority(sub, M, depth)
                if r is not None:
                    return r
            return None
        out3 = np.zeros(3, dtype=np.int64)
        if not K.minority_violation(ls.unary, ls.nd, M, n, out3):
            return self._remove_minority(ls, M)
        if n == 2:
            t = self._first_pair_tuple(ls)
            if t is not None:
                # the first test instance is the whole graph and succeeds
                # with its anchors; hand that assignment straight back
                y, z, d1b, e1b = t
                vals = [0, 0]
                vals[y] = int(ls.dom[y][d1b])
                vals[z] = int(ls.dom[z][e1b])
                return vals
        else:
            r = self._symdiff_loop(ls, M, depth)
            if r[0] == "hom":
                return r[1]
            if r[0] == "empty":
                return None
            # the scan usually leaves the lists tight enough for a second
            # greedy pass to close them outright
            shot = self._greedy_extend(ls, {})
            if shot is not None:
                return shot[0]
        _t = _ptime()
        ok_bc = self._bi_clique(ls, M)
        self.stats["t_bic"] = self.stats.get("t_bic", 0.0) + _ptime() - _t
        if not ok_bc:
            return None
        # the fire loop exhausted the scan, so no shared-support
        # non-minority pattern survives; preprocessing and minority removal
        # re-assert that
        if not ls.pre_process():
            return None
        return self._remove_minority(ls, M)

    def _first_pair_tuple(self, ls):
        n = ls.g.n
        for y in range(n):
            ubits = [i for i in range(int(ls.nd[y]))
                     if (int(ls.unary[y]) >> i) & 1]
            if len(ubits) < 2:
                continue
            for z in range(n):
                if z == y:
                    continue
                for ai, d1 in enumerate(ubits):
                    r1 = int(ls.P[y, z, d1])
                    if not r1:
                        continue
                    for d2 in ubits:
                        if d2 == d1:
                            continue
                        com = r1 & int(ls.P[y, z, d2])
                        if com:
                            e1 = (com & -com).bit_length() - 1
                            return y, z, d1, e1
        return None

    def _symdiff_loop(self, ls, M, depth):
        n = ls.g.n
        shot = self._greedy_extend(ls, {})
        if shot is not None:
            return ("hom", shot[0])
        state = _ScanState(ls)
        sarr = np.zeros(8, dtype=np.int64)
        # witnesses: verified homs of the current instance.  One with
        # phi(y)=d1 and phi(z)=e1 proves the test succeeds (a hom of a
        # pair-consistent instance lands inside every tilde row), so the
        # recursion can be skipped without changing a single removal.
        # Sound removals never strip a pair a verified hom uses, so the
        # pool needs no upkeep afterwards.
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
            # closure masks under the pin y -> d1.  A pair outside its
            # closure cannot occur in any hom mapping y to d1, so each
            # freshly computed mask clears all such pairs in one pass.
            sac = {}
            ext_budget = 40
            rz, rd1, rd2, re1 = 0, 0, 0, -1
            while True:
                _t = _ptime()
                code = K.notmin_scan(
                    ls.P, ls.unary, ls.nd, ls.F, n,
                    y, rz, rd1, rd2, re1,
                    *state.block_args(),
                    state.EMPT, state.EMPTANY,
                    state.out_members, state.out_tuple, sarr)
                self.stats["t_scan"] = self.stats.get("t_scan", 0.0) + _ptime() - _t
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
                    _t = _ptime()
                    su = np.empty(n, dtype=np.uint64)
                    if not K.pin_closure(ls.P, ls.unary, ls.nd, n, y, d1b, su):
                        su[:] = 0
                    sac[d1b] = su
                    cnt, pdead = self._sac_batch(ls, state, y, d1b, su)
                    self.stats["t_sac"] = self.stats.get("t_sac", 0.0) + _ptime() - _t
                    if cnt:
                        self.stats["removals"] += cnt
                        self.stats["sac_removals"] += cnt
                        if pdead:
                            self._drain_stats(sarr)
                            return ("empty",)
                        state.after_removal()
                    if not (int(su[z]) >> e1b) & 1:
                        # the candidate itself was in the batch
                        continue
                phi = None
                for w, wb, _m in pool:
                    if w[y] == d1 and w[z] == e1:
                        phi = (w, wb)
                        break
                if phi is not None:
                    _t = _ptime()
                    self.stats["pool_skips"] += 1
                    marr = np.unique(np.concatenate(
                        (state.out_members[:nm],
                         np.array([y, z], dtype=np.int64))))
                    if len(marr) == n:
                        self._drain_stats(sarr)
                        return ("hom", list(phi[0]))
                    state.record_success_fast(
                        d1b, marr,
                        np.uint64(1) << phi[1][marr].astype(np.uint64))
                    self.stats["t_pool"] = self.stats.get("t_pool", 0.0) + _ptime() - _t
                    continue
                # test the derived instance in place: value masks over the
                # member set, pair rows read straight from the parent
                _t = _ptime()
                self.stats["tests"] += 1
                marr = np.unique(np.concatenate(
                    (state.out_members[:nm],
                     np.array([y, z], dtype=np.int64))))
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
                self.stats["t_sub"] = self.stats.get("t_sub", 0.0) + _ptime() - _t
                if sbits is not None and len(marr) == n:
                    vals = [int(ls.dom[v][b]) for v, b in zip(marr, sbits)]
                    if verify(ls.g, ls.h, vals, ls):
                        self._drain_stats(sarr)
                        return ("hom", vals)
                    sbits = None
                if sbits is None and not wiped:
                    # greedy dead end: decide it for real
                    _t = _ptime()
                    inst = build_sym_diff(ls, y, d1, d2, z, e1,
                                          members=[int(v) for v in marr],
                                          M=M)
                    self.stats["t_build"] = self.stats.get("t_build", 0.0) + _ptime() - _t
                    if inst.consistent:
                        _t = _ptime()
                        r = self._not_minority(inst.lists, inst.M, depth + 1)
                        self.stats["t_rec"] = self.stats.get("t_rec", 0.0) + _ptime() - _t
                        if r is not None:
                            if len(marr) == n:
                                out = [None] * n
                                for v, a in zip(inst.order, r):
                                    out[v] = a
                                self._drain_stats(sarr)
                                return ("hom", out)
                            sbits = [int(np.searchsorted(ls.dom[v], a))
                                     for v, a in zip(inst.order, r)]
                if sbits is None:
                    i, j, em_ab, em_ba = ls.remove_pair(y, d1, z, e1)
                    self.stats["removals"] += 1
                    if self.trace:
                        self.trace({"event": "remove_pair", "phase": "symdiff",
                                    "x": y, "a": d1, "y": z, "b": e1})
                    if em_ab:
                        state.note_emptied(y, z, i)
                    if em_ba:
                        state.note_emptied(z, y, j)
                    if ls.pair_empty(y, z):
                        self._drain_stats(sarr)
                        return ("empty",)
                    state.after_removal()
                    continue
                # record the witness values rather than the derived lists:
                # the containment checks then outlive later removals and the
                # compatibility masks widen
                state.record_success_fast(
                    d1b, marr, np.uint64(1) << np.array(sbits, dtype=np.uint64))
                if ext_budget > 0:
                    ext_budget -= 1
                    _t = _ptime()
                    got = self._greedy_extend(
                        ls, {int(v): b for v, b in zip(marr, sbits)})
                    self.stats["t_ext"] = self.stats.get("t_ext", 0.0) + _ptime() - _t
                    if got is not None:
                        wmask = np.uint64(1) << got[1].astype(np.uint64)
                        pool.append((got[0], got[1], wmask))
                        self.stats["pool_adds"] += 1
                        state.record_success_fast(d1b, allv, wmask)
        self._drain_stats(sarr)
        return ("done",)

    def _sac_batch(self, ls, state, y, d1b, su):
        return sac_batch(ls, state, y, d1b, su, trace=self.trace)

    def _drain_stats(self, sarr):
        self.stats["candidates"] += int(sarr[0])
        self.stats["trivial_skips"] += int(sarr[1])
        self.stats["memo_skips"] += int(sarr[2])
        sarr.fill(0)

    def _greedy_extend(self, ls, pins):
        return greedy_hom(ls, pins, self.stats)

    def _bi_clique(self, ls, M):
        n = ls.g.n
        out = np.zeros(5, dtype=np.int64)
        y0 = z0 = d10 = d20 = 0
        first = True
        while True:
            hit = K.biclique_scan(ls.P, ls.unary, ls.nd, M, 1, n,
                                  y0, z0, d10, d20, out)
            if not hit:
                return True
            y, z, d1b, d2b, e1b = (int(v) for v in out)
            d1 = int(ls.dom[y][d1b])
            e1 = int(ls.dom[z][e1b])
            ls.remove_pair(y, d1, z, e1)
            self.stats["biclique_removals"] += 1
            if self.trace:
                self.trace({"event": "remove_pair", "phase": "biclique",
                            "x": y, "a": d1, "y": z, "b": e1})
            ok = ls.pre_process(seeds=None if first else [(y, z)])
            first = False
            if not ok:
                return False
            y0, z0, d10, d20 = y, z, d1b, d2b

    # -- minority instances -------------------------------------------------

    def _remove_minority(self, ls, M):
        # loop/bi-clique removals can disconnect the constrained product;
        # the minority property is a per-component fact, so split first
        pcomps = ls.gl_components()
        if not pcomps:
            return None
        if len(pcomps) > 1 or pcomps[0] is not ls:
            for sub in sorted(pcomps, key=lambda s: s.sum_sizes()):
                r = self._remove_minority(sub, M)
                if r is not None:
                    return r
            return None
        out3 = np.zeros(3, dtype=np.int64)
        if K.minority_violation(ls.unary, ls.nd, M, ls.g.n, out3):
            x, i, j = (int(v) for v in out3)
            raise InvariantViolation(
                "non-minority pair at vertex %d: (%d, %d)"
                % (x, int(ls.dom[x][i]), int(ls.dom[x][j])))
        induce_maltsev(self.f, ls)  # validates the induced op on every list
        if (self.backend == "oracle"
                and ls.g.n <= self.caps["maltsev_oracle_max_vertices"]):
            return oracle.brute_force_hom(ls.g, ls.h, lists=ls, caps=self.caps)
        return self._maltsev_solve(ls, None)

    def _maltsev_solve(self, ls, bound):
        n = ls.g.n
        if bound is not None:
            cur = (n, ls.sum_sizes())
            if not cur < bound:
                raise InvariantViolation("maltsev recursion did not shrink")
        if not ls.pre_process():
            return None
        if n == 0:
            return []
        if ls.all_singleton():
            return self._check_assignment(ls)
        comps = weak_components(ls.g)
        if len(comps) > 1:
            out = [None] * n
            for comp in comps:
                sub, order = ls.induced(comp)
                r = self._maltsev_solve(sub, None)
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
                r = self._maltsev_solve(sub, None)
                if r is not None:
                    return r
            return None
        self._drop_twins(ls)
        for x in range(n):
            while ls.list_size(x) > 1:
                u = int(ls.unary[x])
                a_bit = (u & -u).bit_length() - 1
                u2 = u & ~(1 << a_bit)
                b_bit = (u2 & -u2).bit_length() - 1
                a_h = int(ls.dom[x][a_bit])
                b_h = int(ls.dom[x][b_bit])
                sub = self._g_xab_instance(ls, x, a_h, b_h)
                self.stats["maltsev_tests"] += 1
                r = self._maltsev_solve(sub, (n, ls.sum_sizes())) \
                    if sub is not None else None
                dropped = a_h if r is None else b_h
                ls.remove_value(x, dropped)
                if self.trace:
                    self.trace({"event": "remove_value", "phase": "maltsev",
                                "x": x, "a": dropped})
                if not ls.pre_process():
                    return None
        g = self._check_assignment(ls)
        if g is None:
            raise InvariantViolation("maltsev elimination reached an invalid "
                                     "assignment")
        return g

    def _drop_twins(self, ls):
        """Values of the same vertex with identical pair rows everywhere
        (diagonal excluded) are interchangeable; keep the smaller."""
        n = ls.g.n
        for x in range(n):
            changed = True
            while changed:
                changed = False
                bits = [i for i in range(int(ls.nd[x]))
                        if (int(ls.unary[x]) >> i) & 1]
                for ai in range(len(bits)):
                    for bi in range(ai + 1, len(bits)):
                        a, b = bits[ai], bits[bi]
                        ra = ls.P[x, :, a].copy()
                        rb = ls.P[x, :, b].copy()
                        ra[x] = rb[x] = 0
                        if np.array_equal(ra, rb):
                            ls.remove_value(x, int(ls.dom[x][b]))
                            changed = True
                            break
                    if changed:
                        break

    def _g_xab_instance(self, ls, x, a_h, b_h):
        """Sub-instance on the correlation region of (x; a, b) with lists
        filtered through x -> a; None when it preprocesses to empty."""
        region = region_g_xab(ls, x, a_h, b_h)[0]
        L1 = ls.restrict({x: a_h})
        sub, _order = L1.induced(region)
        if not sub.pre_process():
            return None
        return sub

    def _check_assignment(self, ls):
        try:
            vals = ls.assignment()
        except InvalidInput:
            return None
        for (u, v) in ls.g.arcs:
            if not ls.h.has_arc(vals[u], vals[v]):
                return None
        for x in range(ls.g.n):
            for y in range(x + 1, ls.g.n):
                if not ls.has_pair(x, vals[x], y, vals[y]):
                    return None
        return vals


def region_g_xab(ls, x, a_h, b_h):
    """Correlation region of (x; a, b): vertices none of whose values
    support both a and b, grown through boundary witnesses.  Returns
    (region, boundary), sorted parent ids.

    A boundary vertex y joins (with values c1, c2) when some region vertex
    z separates c1 from c2 the same way under the x->a filtered lists:
    some (c1,d1) is listed, some (c2,d2) with d2 unsupported for c1.
    """
    n = ls.g.n
    ab = ls.value_bit(x, a_h)
    bb = ls.value_bit(x, b_h)
    T = ls.P[x, :, ab] & ls.P[x, :, bb]
    region = {v for v in range(n) if v != x and int(T[v]) == 0}
    region.add(x)
    L1 = ls.restrict({x: a_h})
    stack = [(x, a_h, b_h)]
    visited = {(x, a_h, b_h)}
    while stack:
        stack.pop()
        bnd = sorted({w for v in region for w in ls.g.neighbours(v)} - region)
        for yv in bnd:
            ly = L1.unary_set(yv)
            for c1 in ly:
                c1b = L1.value_bit(yv, c1)
                for c2 in ly:
                    if c1 == c2 or (yv, c1, c2) in visited:
                        continue
                    wit = False
                    for zv in region:
                        r1 = int(L1.P[yv, zv, c1b])
                        if not r1:
                            continue
                        r2 = int(L1.P[yv, zv, L1.value_bit(yv, c2)])
                        if r2 & ~r1:
                            wit = True
                            break
                    if wit:
                        visited.add((yv, c1, c2))
                        stack.append((yv, c1, c2))
                        T2 = L1.P[yv, :, c1b] & \
                            L1.P[yv, :, L1.value_bit(yv, c2)]
                        for v in range(n):
                            if v != yv and int(T2[v]) == 0:
                                region.add(v)
                        region.add(yv)
    bnd = sorted({w for v in region for w in ls.g.neighbours(v)} - region)
    return sorted(region), bnd


# -- module-level operation wrappers ------------------------------------


def sym_diff(ls, y, d1, d2, z, e1):
    """Public sym-diff constructor (H-id arguments)."""
    return build_sym_diff(ls, y, d1, d2, z, e1)


def not_minority(ls, f, caps=None, maltsev_backend="alg7", trace=None):
    """Decide the (2,3)-consistent instance; returns a hom or None."""
    s = Solver(ls.h, f, caps=caps, maltsev_backend=maltsev_backend,
               trace=trace, validate_op=False)
    work = ls.copy()
    M = minority_matrix(work, s.f)
    return s._not_minority(work, M, 0)


def bi_clique_instances(ls, f, caps=None):
    """Bi-clique pruning on a copy; returns the pruned system or None."""
    s = Solver(ls.h, f, caps=caps, validate_op=False)
    work = ls.copy()
    M = minority_matrix(work, s.f)
    if not s._bi_clique(work, M):
        return None
    return work

def remove_minority(ls, f, caps=None, maltsev_backend="alg7"):
    """Solve an all-minority instance (checked); hom or None."""
    s = Solver(ls.h, f, caps=caps, maltsev_backend=maltsev_backend,
               validate_op=False)
    work = ls.copy()
    M = minority_matrix(work, s.f)
    return s._remove_minority(work, M)


def maltsev_solve(ls, caps=None):
    """Value-elimination solver; needs no operation at all."""
    s = Solver(ls.h, None, caps=caps, validate_op=False)
    return s._maltsev_solve(ls.copy(), None)


def digraph_hom(g, h, f, lists=None, caps=None, maltsev_backend="alg7",
                trace=None):
    """Top-level decision: a homomorphism g -> h (within lists) or None.

    f must be a weak near-unanimity polymorphism of h (usage error if not).
    """
    s = Solver(h, f, caps=caps, maltsev_backend=maltsev_backend, trace=trace)
    return s.solve(g, lists=lists)
