"""numba kernels for the bit-packed list engine.

Everything here works on the packed representation owned by
lists.ListSystem: per-vertex candidate domains of size <= 64, one uint64
mask per (vertex, vertex, value) pair row.  All masks are uint64; mixing
int64 into the bit arithmetic silently promotes to float under numba, so
every constant and shift goes through explicit uint64 casts.
"""

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(cache=True, inline="always")
def popcnt64(x):
    x = x - ((x >> U1) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True, inline="always")
def ctz64(x):
    # x must be nonzero
    return popcnt64((x & (U0 - x)) - U1)


@njit(cache=True)
def normalize_rule_a(P, unary, nd, n):
    """Clamp every pair row to the current unary lists; rebuild diagonals."""
    for x in range(n):
        ux = unary[x]
        for y in range(n):
            if y == x:
                for i in range(nd[x]):
                    bit = U1 << np.uint64(i)
                    if (ux & bit) != U0:
                        P[x, x, i] = bit
                    else:
                        P[x, x, i] = U0
            else:
                uy = unary[y]
                for i in range(nd[x]):
                    row = P[x, y, i]
                    if row == U0:
                        continue
                    bit = U1 << np.uint64(i)
                    if (ux & bit) == U0:
                        P[x, y, i] = U0
                    else:
                        nr = row & uy
                        if nr != row:
                            P[x, y, i] = nr


@njit(cache=True)
def compute_full_flags(P, unary, nd, F, n):
    """F[x,y] = 0 iff pairs(x,y) is the full unary product (nothing to learn)."""
    for x in range(n):
        ux = unary[x]
        for y in range(n):
            if x == y:
                F[x, y] = 0
                continue
            uy = unary[y]
            full = True
            for i in range(nd[x]):
                bit = U1 << np.uint64(i)
                if (ux & bit) != U0 and P[x, y, i] != uy:
                    full = False
                    break
            F[x, y] = 0 if full else 1


@njit(cache=True, inline="always")
def _mirror_clear(P, c, a, i, removed):
    # drop bit i from column rows of the transposed pair
    rr = removed
    nb = ~(U1 << np.uint64(i))
    while rr != U0:
        low = rr & (U0 - rr)
        b = popcnt64(low - U1)
        P[c, a, b] &= nb
        rr ^= low


@njit(cache=True)
def _compose(P, nd, F, a, b, c):
    """P[a,c] &= P[a,b] o P[b,c]; mirrors into P[c,a].  Returns True on change."""
    ch = False
    for i in range(nd[a]):
        row = P[a, c, i]
        if row == U0:
            continue
        mid = P[a, b, i]
        acc = U0
        mm = mid
        while mm != U0:
            low = mm & (U0 - mm)
            e = popcnt64(low - U1)
            acc |= P[b, c, e]
            if (row & ~acc) == U0:
                break
            mm ^= low
        nrow = row & acc
        if nrow != row:
            P[a, c, i] = nrow
            _mirror_clear(P, c, a, i, row ^ nrow)
            ch = True
    if ch:
        F[a, c] = 1
        F[c, a] = 1
    return ch


@njit(cache=True)
def _apply_rule_a(P, unary, nd, x, y):
    ch = False
    ux = unary[x]
    uy = unary[y]
    for i in range(nd[x]):
        row = P[x, y, i]
        if row == U0:
            continue
        bit = U1 << np.uint64(i)
        if (ux & bit) == U0:
            P[x, y, i] = U0
            _mirror_clear(P, y, x, i, row)
            ch = True
        else:
            nr = row & uy
            if nr != row:
                P[x, y, i] = nr
                _mirror_clear(P, y, x, i, row ^ nr)
                ch = True
    return ch


@njit(cache=True)
def pair_fixpoint(P, unary, nd, F, n, seed_x, seed_y):
    """Worklist closure of the support + composition rules.

    seed_x/seed_y hold the dirty pairs; pass empty arrays to process
    everything.  Returns 0 as soon as some unary list empties, else 1.
    """
    qcap = n * n + 1
    qx = np.empty(qcap, np.int64)
    qy = np.empty(qcap, np.int64)
    inq = np.zeros((n, n), np.uint8)
    head = 0
    tail = 0

    if seed_x.shape[0] == 0:
        for x in range(n):
            for y in range(x + 1, n):
                qx[tail] = x
                qy[tail] = y
                tail = (tail + 1) % qcap
                inq[x, y] = 1
    else:
        for s in range(seed_x.shape[0]):
            a = seed_x[s]
            b = seed_y[s]
            if a == b:
                continue
            cx = a if a < b else b
            cy = b if a < b else a
            if inq[cx, cy] == 0:
                inq[cx, cy] = 1
                qx[tail] = cx
                qy[tail] = cy
                tail = (tail + 1) % qcap

    while head != tail:
        x = qx[head]
        y = qy[head]
        head = (head + 1) % qcap
        inq[x, y] = 0

        # support rule, both sides: a value whose row emptied dies
        for side in range(2):
            a = x if side == 0 else y
            b = y if side == 0 else x
            dead = U0
            ua = unary[a]
            for i in range(nd[a]):
                bit = U1 << np.uint64(i)
                if (ua & bit) != U0 and P[a, b, i] == U0:
                    dead |= bit
            if dead != U0:
                unary[a] = ua & ~dead
                if unary[a] == U0:
                    return 0
                # rebuild the diagonal for a
                for i in range(nd[a]):
                    bit = U1 << np.uint64(i)
                    if (unary[a] & bit) != U0:
                        P[a, a, i] = bit
                    else:
                        P[a, a, i] = U0
                for w in range(n):
                    if w == a:
                        continue
                    c1 = _apply_rule_a(P, unary, nd, a, w)
                    c2 = _apply_rule_a(P, unary, nd, w, a)
                    if c1 or c2:
                        F[a, w] = 1
                        F[w, a] = 1
                        cx = a if a < w else w
                        cy = w if a < w else a
                        if inq[cx, cy] == 0:
                            inq[cx, cy] = 1
                            qx[tail] = cx
                            qy[tail] = cy
                            tail = (tail + 1) % qcap

        # composition rules through the refreshed pair; skip full factors
        if F[x, y] != 0 or F[y, x] != 0:
            for w in range(n):
                if w == x or w == y:
                    continue
                hit = False
                if F[x, y] != 0 and F[y, w] != 0:
                    if _compose(P, nd, F, x, y, w):
                        hit = True
                        cx = x if x < w else w
                        cy = w if x < w else x
                        if inq[cx, cy] == 0:
                            inq[cx, cy] = 1
                            qx[tail] = cx
                            qy[tail] = cy
                            tail = (tail + 1) % qcap
                if F[y, x] != 0 and F[x, w] != 0:
                    if _compose(P, nd, F, y, x, w):
                        hit = True
                        cx = y if y < w else w
                        cy = w if y < w else y
                        if inq[cx, cy] == 0:
                            inq[cx, cy] = 1
                            qx[tail] = cx
                            qy[tail] = cy
                            tail = (tail + 1) % qcap
                if F[w, x] != 0 and F[x, y] != 0:
                    if _compose(P, nd, F, w, x, y):
                        hit = True
                        cx = w if w < y else y
                        cy = y if w < y else w
                        if inq[cx, cy] == 0:
                            inq[cx, cy] = 1
                            qx[tail] = cx
                            qy[tail] = cy
                            tail = (tail + 1) % qcap
                if F[w, y] != 0 and F[y, x] != 0:
                    if _compose(P, nd, F, w, y, x):
                        hit = True
                        cx = w if w < x else x
                        cy = x if x < w else w
                        if inq[cx, cy] == 0:
                            inq[cx, cy] = 1
                            qx[tail] = cx
                            qy[tail] = cy
                            tail = (tail + 1) % qcap
                if hit:
                    pass
    return 1


@njit(cache=True)
def biclique_scan(P, unary, nd, M, use_m, n, y0, z0, d10, d20, out):
    """First (y,z,d1,d2,e1), in lexicographic order starting at the given
    (y,z,d1,d2) block, with (d1,e1),(d2,e1) both present and (when use_m)
    f(y; d2..d2, d1) != d1.  Candidate validity only ever decays, so the
    caller may resume from the last hit instead of rescanning from the top.
    """
    for y in range(y0, n):
        uy = unary[y]
        zs = z0 if y == y0 else 0
        for z in range(zs, n):
            if z == y:
                continue
            at_z = y == y0 and z == z0
            d1s = d10 if at_z else 0
            for d1 in range(d1s, nd[y]):
                if (uy >> np.uint64(d1)) & U1 == U0:
                    continue
                r1 = P[y, z, d1]
                if r1 == U0:
                    continue
                d2s = d20 if (at_z and d1 == d10) else 0
                for d2 in range(d2s, nd[y]):
                    if d2 == d1:
                        continue
                    if (uy >> np.uint64(d2)) & U1 == U0:
                        continue
                    if use_m != 0 and M[y, d2, d1] != 0:
                        continue
                    com = r1 & P[y, z, d2]
                    if com == U0:
                        continue
                    out[0] = y
                    out[1] = z
                    out[2] = d1
                    out[3] = d2
                    out[4] = ctz64(com)
                    return 1
    return 0


@njit(cache=True)
def minority_violation(unary, nd, M, n, out):
    """First (x, i, j) with i,j in L(x) and f(x; i..i, j) != j, else -1s."""
    for x in range(n):
        ux = unary[x]
        for i in range(nd[x]):
            if (ux >> np.uint64(i)) & U1 == U0:
                continue
            for j in range(nd[x]):
                if (ux >> np.uint64(j)) & U1 == U0:
                    continue
                if M[x, i, j] == 0:
                    out[0] = x
                    out[1] = i
                    out[2] = j
                    return 1
    return 0


@njit(cache=True)
def notmin_scan(
    P, unary, nd, F, n,
    y, rz, rd1, rd2, re1,
    Tc, Tv, WVl, WVk, WVc,
    ES, EN, EL, ESl, ESc, ECNT,
    EGOOD, EGOODV, ECOV, ER1,
    EMPT, EMPTANY,
    out_members, out_tuple, stats,
):
    """Advance the not-minority scan within one y-block.

    Iterates (z,d1,d2,e1) lexicographically for the fixed y, strictly after
    the resume position (rz,rd1,rd2,re1) (re1=-1 starts at that block),
    consuming provable no-ops on the way:

      * trivial skips -- no vertex outside {y,z} correlates, so the derived
        sub-instance is {y,z} with lists {d1},{e1} and succeeds outright;
      * memo skips -- a previously recorded success dominates this tuple's
        sub-instance (member set inside the recorded set, recorded lists
        inside the current derived lists pointwise), so the test would
        succeed without touching anything.

    Neither kind changes state, so consuming them preserves the exact
    removal sequence of the plain loop.  All caches are owned by the caller
    and are scoped to this y-block; the caller resets the validity flags
    after removals (EGOOD survives them: a removal only rewrites the pair
    rows of (y, z_f), which the goodness masks never read).

    Returns 1 with out_tuple/out_members filled when a candidate needs a
    genuine recursive test, 0 when the block is exhausted.

    stats: [0] candidates seen, [1] trivial skips, [2] memo skips,
           [3] tests handed back.
    """
    K = ES.shape[1]
    uy = unary[y]
    for z in range(rz, n):
            if z == y:
                continue
            at_rz = z == rz
            d1s = rd1 if at_rz else 0
            for d1 in range(d1s, nd[y]):
                if (uy >> np.uint64(d1)) & U1 == U0:
                    continue
                r1 = P[y, z, d1]
                if r1 == U0:
                    continue
                ne = ECNT[d1]
                d2s = rd2 if (at_rz and d1 == rd1) else 0
                for d2 in range(d2s, nd[y]):
                    if d2 == d1:
                        continue
                    if (uy >> np.uint64(d2)) & U1 == U0:
                        continue
                    com = r1 & P[y, z, d2]
                    if at_rz and d1 == rd1 and d2 == rd2 and re1 >= 0:
                        # strictly after the resume tuple
                        if re1 >= 63:
                            com = U0
                        else:
                            com = com & ~((U1 << np.uint64(re1 + 1)) - U1)
                    if com == U0:
                        continue

                    # T rows for this (d1,d2): correlation with y
                    if Tv[d1, d2] == 0:
                        cnt = 0
                        for v in range(n):
                            t = P[y, v, d1] & P[y, v, d2]
                            Tc[d1, d2, v] = t
                            if v == y:
                                continue
                            if t == U0:
                                WVl[d1, d2, cnt] = v
                                WVk[d1, d2, cnt] = 1
                                cnt += 1
                            elif t != unary[v]:
                                WVl[d1, d2, cnt] = v
                                WVk[d1, d2, cnt] = 2
                                cnt += 1
                        WVc[d1, d2] = cnt
                        Tv[d1, d2] = 1
                        for e in range(K):
                            ECOV[d1, d2, e] = -1
                    nwv = WVc[d1, d2]

                    stats[0] += popcnt64(com)
                    emask = EMPTANY[z]

                    if nwv == 0:
                        # every vertex fully correlates: members only via
                        # emptied rows, everything else is a trivial skip
                        triv = com & ~emask
                        if triv != U0:
                            stats[1] += popcnt64(triv)
                            com ^= triv
                        if com == U0:
                            continue

                    # word-parallel memo hits
                    if ne > 0 and com != U0:
                        hitall = U0
                        for e in range(ne):
                            cov = ECOV[d1, d2, e]
                            if cov == -1:
                                cov = 1
                                for t in range(nwv):
                                    v = WVl[d1, d2, t]
                                    if (ES[d1, e, v >> 6] >> np.uint64(v & 63)) & U1 == U0:
                                        cov = 0
                                        break
                                ECOV[d1, d2, e] = cov
                            if cov == 0:
                                continue
                            r1ok = ER1[d1, e]
                            if r1ok == -1:
                                r1ok = 1
                                for t in range(ESc[d1, e]):
                                    v = ESl[d1, e, t]
                                    if v == y:
                                        continue
                                    if (EL[d1, e, v] & ~P[y, v, d1]) != U0:
                                        r1ok = 0
                                        break
                                ER1[d1, e] = r1ok
                            if r1ok == 0:
                                continue
                            if (ES[d1, e, z >> 6] >> np.uint64(z & 63)) & U1 == U0:
                                # z outside the recorded set: usable only if
                                # z has no arcs into it
                                if (EN[d1, e, z >> 6] >> np.uint64(z & 63)) & U1 != U0:
                                    continue
                            if EGOODV[d1, e, z] == 0:
                                g = ~U0
                                for t in range(ESc[d1, e]):
                                    v = ESl[d1, e, t]
                                    if v == y:
                                        continue
                                    lv = EL[d1, e, v]
                                    while lv != U0:
                                        low = lv & (U0 - lv)
                                        j = popcnt64(low - U1)
                                        g &= P[v, z, j]
                                        lv ^= low
                                    if g == U0:
                                        break
                                EGOOD[d1, e, z] = g
                                EGOODV[d1, e, z] = 1
                            hitall |= EGOOD[d1, e, z]
                        hits = com & hitall & ~emask
                        if hits != U0:
                            stats[2] += popcnt64(hits)
                            com ^= hits

                    # leftovers: per-e1 membership scan
                    while com != U0:
                        low = com & (U0 - com)
                        e1 = ctz64(com)
                        com ^= low

                        nm = 0
                        for t in range(nwv):
                            v = WVl[d1, d2, t]
                            if v == z:
                                continue
                            if WVk[d1, d2, t] == 1:
                                out_members[nm] = v
                                nm += 1
                            else:
                                if (Tc[d1, d2, v] & P[z, v, e1]) == U0:
                                    out_members[nm] = v
                                    nm += 1
                        if (emask >> np.uint64(e1)) & U1 != U0:
                            for v in range(n):
                                if v == y or v == z:
                                    continue
                                if (EMPT[z, v] >> np.uint64(e1)) & U1 != U0:
                                    # row (z->v) at e1 emptied: v is a member
                                    # unless already collected
                                    seen = False
                                    for t in range(nm):
                                        if out_members[t] == v:
                                            seen = True
                                            break
                                    if not seen:
                                        out_members[nm] = v
                                        nm += 1

                        if nm == 0:
                            stats[1] += 1
                            continue

                        # individual memo check
                        hit = False
                        for e in range(ne):
                            if ER1[d1, e] != 1:
                                continue
                            if (ES[d1, e, z >> 6] >> np.uint64(z & 63)) & U1 == U0:
                                if (EN[d1, e, z >> 6] >> np.uint64(z & 63)) & U1 != U0:
                                    continue
                            if EGOODV[d1, e, z] == 0:
                                g = ~U0
                                for t2 in range(ESc[d1, e]):
                                    v2 = ESl[d1, e, t2]
                                    if v2 == y:
                                        continue
                                    lv = EL[d1, e, v2]
                                    while lv != U0:
                                        low2 = lv & (U0 - lv)
                                        g &= P[v2, z, popcnt64(low2 - U1)]
                                        lv ^= low2
                                    if g == U0:
                                        break
                                EGOOD[d1, e, z] = g
                                EGOODV[d1, e, z] = 1
                            if (EGOOD[d1, e, z] >> np.uint64(e1)) & U1 == U0:
                                continue
                            ok = True
                            for t in range(nm):
                                v = out_members[t]
                                if (ES[d1, e, v >> 6] >> np.uint64(v & 63)) & U1 == U0:
                                    ok = False
                                    break
                            if ok:
                                hit = True
                                break
                        if hit:
                            stats[2] += 1
                            continue

                        out_tuple[0] = y
                        out_tuple[1] = z
                        out_tuple[2] = d1
                        out_tuple[3] = d2
                        out_tuple[4] = e1
                        out_tuple[5] = nm
                        stats[3] += 1
                        return 1
    return 0


@njit(cache=True)
def product_component_labels(P, unary, nd, n, adj, labels):
    """Weak components of the constrained product, labelled per (vertex, bit).

    adj: (n,n) uint8 with 1 where the pair digraph has an arc either way.
    labels: (n, mmax) int32 preset to -1; filled with component ids.
    Returns the number of components.
    """
    mmax = labels.shape[1]
    qcap = n * mmax + 1
    qv = np.empty(qcap, np.int64)
    qb = np.empty(qcap, np.int64)
    comp = 0
    for sx in range(n):
        usx = unary[sx]
        for sb in range(nd[sx]):
            if (usx >> np.uint64(sb)) & U1 == U0:
                continue
            if labels[sx, sb] >= 0:
                continue
            head = 0
            tail = 0
            qv[tail] = sx
            qb[tail] = sb
            tail += 1
            labels[sx, sb] = comp
            while head != tail:
                x = qv[head]
                b = qb[head]
                head += 1
                for w in range(n):
                    if w == x or adj[x, w] == 0:
                        continue
                    row = P[x, w, b]
                    while row != U0:
                        low = row & (U0 - row)
                        c = popcnt64(low - U1)
                        row ^= low
                        if labels[w, c] < 0:
                            labels[w, c] = comp
                            qv[tail] = w
                            qb[tail] = c
                            tail += 1
            comp += 1
    return comp


@njit(cache=True)
def member_greedy(P, nd, su, mv, nm):
    """Greedy search over the vertex subset mv[:nm]: arc-consistency on the
    value masks su (indexed by original vertex id) against read-only pair
    rows, then best-supported pinning with re-propagation, no backtracking.
    1 iff every subset mask ends a singleton -- the final fixpoint has each
    chosen value supported by every other choice, so the assignment
    satisfies all pair lists inside the subset outright.  0 the moment a
    mask empties; that is a greedy dead end, not a refutation."""
    qcap = nm + 1
    q = np.empty(qcap, np.int64)
    inq = np.zeros(nm, np.uint8)
    head = 0
    tail = 0
    for t in range(nm):
        if su[mv[t]] == U0:
            return 0
        q[tail] = t
        tail = (tail + 1) % qcap
        inq[t] = 1
    while True:
        while head != tail:
            xt = q[head]
            head = (head + 1) % qcap
            inq[xt] = 0
            x = mv[xt]
            ax = su[x]
            for wt in range(nm):
                if wt == xt:
                    continue
                w = mv[wt]
                uw = su[w]
                new = U0
                rem = uw
                while rem != U0:
                    low = rem & (U0 - rem)
                    if (P[w, x, ctz64(rem)] & ax) != U0:
                        new |= low
                    rem ^= low
                if new != uw:
                    if new == U0:
                        return 0
                    su[w] = new
                    if inq[wt] == 0:
                        inq[wt] = 1
                        q[tail] = wt
                        tail = (tail + 1) % qcap
        pick = -1
        for t in range(nm):
            u = su[mv[t]]
            if (u & (u - U1)) != U0:
                pick = t
                break
        if pick < 0:
            return 1
        x = mv[pick]
        rem = su[x]
        best = 0
        bests = np.int64(-1)
        while rem != U0:
            low = rem & (U0 - rem)
            i = ctz64(rem)
            rem ^= low
            sc = np.int64(0)
            for wt in range(nm):
                w = mv[wt]
                if w != x:
                    sc += popcnt64(P[x, w, i] & su[w])
            if sc > bests:
                bests = sc
                best = i
        su[x] = U1 << np.uint64(best)
        q[tail] = pick
        tail = (tail + 1) % qcap
        inq[pick] = 1


@njit(cache=True)
def pin_closure(P, unary, nd, n, pin, pinbit, outU):
    """Arc-consistency closure of the unary lists under a single pinned
    value, computed against read-only pair rows.  outU receives per-vertex
    survivor masks; returns 0 iff some vertex loses every value."""
    for v in range(n):
        outU[v] = unary[v]
    outU[pin] = U1 << np.uint64(pinbit)
    qcap = n + 1
    q = np.empty(qcap, np.int64)
    inq = np.zeros(n, np.uint8)
    q[0] = pin
    inq[pin] = 1
    head = 0
    tail = 1
    while head != tail:
        x = q[head]
        head = (head + 1) % qcap
        inq[x] = 0
        ax = outU[x]
        for w in range(n):
            if w == x:
                continue
            uw = outU[w]
            if uw == U0:
                return 0
            new = U0
            for i in range(nd[w]):
                bit = U1 << np.uint64(i)
                if (uw & bit) != U0 and (P[w, x, i] & ax) != U0:
                    new |= bit
            if new != uw:
                outU[w] = new
                if new == U0:
                    return 0
                if inq[w] == 0:
                    inq[w] = 1
                    q[tail] = w
                    tail = (tail + 1) % qcap
    return 1


@njit(cache=True)
def sac_prune(P, unary, nd, F, n, y, d1b, su, EMPT, EMPTANY, out2):
    """Bulk closure removals: drop from every pair list L(y, z) each pair
    (d1, e) whose e lies outside the closure mask su[z], mirror rows
    included, flagging emptied rows in EMPT/EMPTANY.  Returns the number of
    pairs dropped; out2[0] is set when some pair list (y, z) empties
    entirely, which kills the whole instance."""
    removed = 0
    d1bit = U1 << np.uint64(d1b)
    for z in range(n):
        if z == y:
            continue
        row = P[y, z, d1b]
        kill = row & ~su[z]
        if kill == U0:
            continue
        P[y, z, d1b] = row & su[z]
        F[y, z] = 1
        F[z, y] = 1
        while kill != U0:
            low = kill & (U0 - kill)
            e1b = ctz64(kill)
            kill ^= low
            m = P[z, y, e1b] & ~d1bit
            P[z, y, e1b] = m
            if m == U0:
                EMPT[z, y] |= low
                EMPTANY[z] |= low
            removed += 1
        if P[y, z, d1b] == U0:
            EMPT[y, z] |= d1bit
            EMPTANY[y] |= d1bit
            dead = True
            for d in range(nd[y]):
                if P[y, z, d] != U0:
                    dead = False
                    break
            if dead:
                out2[0] = 1
                return removed
    return removed
