"""Numba kernels for the column-major bit-packed tableau.

Layout shared with ``_kernels_numpy``:

* ``xs[q, w]`` / ``zs[q, w]`` (uint64) hold the X / Z bit of qubit ``q`` for
  rows ``64*w .. 64*w+63``; one bit per generator row.
* ``sg[w]`` holds sign bits (1 means -1), ``tg[w]`` holds per-row tags (1 marks
  a row appended by a commuting measurement).
* rows ``>= nrows`` are all-zero in every array.
"""
import numpy as np
from numba import njit

ZERO = np.uint64(0)
ONE = np.uint64(1)
ALL = np.uint64(0xFFFFFFFFFFFFFFFF)
_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)
_S58 = np.uint64(58)


def _debruijn_table():
    table = np.zeros(64, dtype=np.int64)
    for i in range(64):
        table[((1 << i) * 0x03F79D71B4CB0A89 % (1 << 64)) >> 58] = i
    return table


_DB = _debruijn_table()


@njit(cache=True)
def lsb(w):
    return _DB[((w & (~w + ONE)) * _DEBRUIJN) >> _S58]


@njit(cache=True)
def bit(r):
    return ONE << np.uint64(r & 63)


# ---------------------------------------------------------------- gates


@njit(cache=True)
def apply_layer(xs, zs, sg, nw, qa, qb, gidx, mats, anfs, track):
    for i in range(qa.shape[0]):
        a = qa[i]
        b = qb[i]
        g = gidx[i]
        m = mats[g]
        f = anfs[g]
        for w in range(nw):
            v0 = xs[a, w]
            v1 = zs[a, w]
            v2 = xs[b, w]
            v3 = zs[b, w]
            if (v0 | v1 | v2 | v3) == ZERO:
                continue
            xs[a, w] = (v0 & m[0, 0]) ^ (v1 & m[0, 1]) ^ (v2 & m[0, 2]) ^ (v3 & m[0, 3])
            zs[a, w] = (v0 & m[1, 0]) ^ (v1 & m[1, 1]) ^ (v2 & m[1, 2]) ^ (v3 & m[1, 3])
            xs[b, w] = (v0 & m[2, 0]) ^ (v1 & m[2, 1]) ^ (v2 & m[2, 2]) ^ (v3 & m[2, 3])
            zs[b, w] = (v0 & m[3, 0]) ^ (v1 & m[3, 1]) ^ (v2 & m[3, 2]) ^ (v3 & m[3, 3])
            if track:
                p3 = v0 & v1
                p5 = v0 & v2
                p6 = v1 & v2
                p7 = p3 & v2
                lo = ((v0 & f[1]) ^ (v1 & f[2]) ^ (p3 & f[3]) ^ (v2 & f[4])
                      ^ (p5 & f[5]) ^ (p6 & f[6]) ^ (p7 & f[7]))
                hi = (f[8] ^ (v0 & f[9]) ^ (v1 & f[10]) ^ (p3 & f[11]) ^ (v2 & f[12])
                      ^ (p5 & f[13]) ^ (p6 & f[14]) ^ (p7 & f[15]))
                sg[w] ^= lo ^ (v3 & hi)


@njit(cache=True)
def apply_h(xs, zs, sg, nw, a, track):
    for w in range(nw):
        x = xs[a, w]
        z = zs[a, w]
        if track:
            sg[w] ^= x & z
        xs[a, w] = z
        zs[a, w] = x


@njit(cache=True)
def apply_s(xs, zs, sg, nw, a, track):
    for w in range(nw):
        x = xs[a, w]
        z = zs[a, w]
        if track:
            sg[w] ^= x & z
        zs[a, w] = z ^ x


@njit(cache=True)
def apply_cnot(xs, zs, sg, nw, c, t, track):
    for w in range(nw):
        xc = xs[c, w]
        zc = zs[c, w]
        xt = xs[t, w]
        zt = zs[t, w]
        if track:
            sg[w] ^= xc & zt & ~(xt ^ zc)
        xs[t, w] = xt ^ xc
        zs[c, w] = zc ^ zt


@njit(cache=True)
def apply_swap(xs, zs, nw, a, b):
    for w in range(nw):
        t = xs[a, w]
        xs[a, w] = xs[b, w]
        xs[b, w] = t
        t = zs[a, w]
        zs[a, w] = zs[b, w]
        zs[b, w] = t


# ---------------------------------------------------------------- rows


@njit(cache=True)
def rowmul(xs, zs, sg, nq, p, mask, nw, track):
    """Left-multiply every row selected by ``mask`` by row ``p``."""
    pw = p >> 6
    pb = bit(p)
    c0 = np.zeros(nw, dtype=np.uint64)
    c1 = np.zeros(nw, dtype=np.uint64)
    for c in range(nq):
        px = (xs[c, pw] & pb) != ZERO
        pz = (zs[c, pw] & pb) != ZERO
        if not px and not pz:
            continue
        if track:
            for w in range(nw):
                m = mask[w]
                if m == ZERO:
                    continue
                x2 = xs[c, w] & m
                z2 = zs[c, w] & m
                if px and pz:
                    plus = z2 & ~x2
                    minus = x2 & ~z2
                elif px:
                    plus = z2 & x2
                    minus = z2 & ~x2
                else:
                    plus = x2 & ~z2
                    minus = x2 & z2
                c1[w] ^= c0[w] & plus
                c0[w] ^= plus
                c1[w] ^= ~c0[w] & minus
                c0[w] ^= minus
        if px:
            for w in range(nw):
                xs[c, w] ^= mask[w]
        if pz:
            for w in range(nw):
                zs[c, w] ^= mask[w]
    if track:
        flip = ALL if (sg[pw] & pb) != ZERO else ZERO
        for w in range(nw):
            sg[w] ^= mask[w] & (c1[w] ^ flip)


@njit(cache=True)
def clear_row(xs, zs, sg, tg, nq, r):
    rw = r >> 6
    nb = ~bit(r)
    for c in range(nq):
        xs[c, rw] &= nb
        zs[c, rw] &= nb
    sg[rw] &= nb
    tg[rw] &= nb


@njit(cache=True)
def remove_row(xs, zs, sg, tg, nrows, nq, p):
    """Delete row ``p`` by moving the last row into its slot."""
    last = nrows - 1
    if p != last:
        lw = last >> 6
        lb = bit(last)
        pw = p >> 6
        pb = bit(p)
        for c in range(nq):
            if xs[c, lw] & lb:
                xs[c, pw] |= pb
            else:
                xs[c, pw] &= ~pb
            if zs[c, lw] & lb:
                zs[c, pw] |= pb
            else:
                zs[c, pw] &= ~pb
        if sg[lw] & lb:
            sg[pw] |= pb
        else:
            sg[pw] &= ~pb
        if tg[lw] & lb:
            tg[pw] |= pb
        else:
            tg[pw] &= ~pb
    clear_row(xs, zs, sg, tg, nq, last)
    return last


@njit(cache=True)
def first_row(col, nw, excluded):
    for w in range(nw):
        avail = col[w] & ~excluded[w]
        if avail != ZERO:
            return w * 64 + lsb(avail)
    return -1


@njit(cache=True)
def eliminate_column(xs, zs, sg, nrows, nq, q, is_z, excluded, track):
    """Pick a pivot outside ``excluded`` with a bit in column (q, x|z) and clear
    that bit from every other row. Returns the pivot row or -1."""
    nw = (nrows + 63) >> 6
    col = zs[q] if is_z else xs[q]
    p = first_row(col, nw, excluded)
    if p < 0:
        return -1
    mask = col[:nw].copy()
    mask[p >> 6] &= ~bit(p)
    rowmul(xs, zs, sg, nq, p, mask, nw, track)
    return p


# ---------------------------------------------------------------- measurement


@njit(cache=True)
def measure_hot(xs, zs, sg, tg, nrows, nq, q, outcome, track):
    """Z measurement on a row set spanning the system projection.

    Returns ``(nrows, branch)`` with branch 3 when some row anticommutes
    (pivot replaced by the signed Z) and 2 when Z_q was appended.
    """
    nw = (nrows + 63) >> 6
    p = -1
    for w in range(nw):
        if xs[q, w] != ZERO:
            p = w * 64 + lsb(xs[q, w])
            break
    if p >= 0:
        mask = xs[q, :nw].copy()
        mask[p >> 6] &= ~bit(p)
        rowmul(xs, zs, sg, nq, p, mask, nw, track)
        clear_row(xs, zs, sg, tg, nq, p)
        zs[q, p >> 6] |= bit(p)
        if outcome:
            sg[p >> 6] |= bit(p)
        return nrows, 3
    r = nrows
    zs[q, r >> 6] |= bit(r)
    if outcome:
        sg[r >> 6] |= bit(r)
    tg[r >> 6] |= bit(r)
    return nrows + 1, 2


# ---------------------------------------------------------------- channels


@njit(cache=True)
def channel(xs, zs, sg, tg, nrows, n, site, kind, retain, track):
    """Stinespring channel on ``site`` using scratch qubit columns n, n+1.

    kind: 0 dephasing (CNOT to |0>), 1 resetting (SWAP with |0>),
    2 depolarizing (SWAP with one half of a Bell pair).
    retain=False traces the fresh qubits out; retain=True keeps them as
    ancillas and compresses them away. Returns ``(nrows, dropped)`` where
    dropped counts ancilla-only rows discarded.
    """
    e0 = n
    if kind == 2:
        nsc = 2
        r = nrows
        xs[e0, r >> 6] |= bit(r)
        xs[e0 + 1, r >> 6] |= bit(r)
        r += 1
        zs[e0, r >> 6] |= bit(r)
        zs[e0 + 1, r >> 6] |= bit(r)
        nrows += 2
        apply_swap(xs, zs, (nrows + 63) >> 6, site, e0)
    else:
        nsc = 1
        r = nrows
        zs[e0, r >> 6] |= bit(r)
        nrows += 1
        if kind == 0:
            apply_cnot(xs, zs, sg, (nrows + 63) >> 6, site, e0, track)
        else:
            apply_swap(xs, zs, (nrows + 63) >> 6, site, e0)
    nq = n + nsc
    nw = (nrows + 63) >> 6
    piv = np.empty(2 * nsc, dtype=np.int64)
    npiv = 0
    pivmask = np.zeros(nw, dtype=np.uint64)
    for k in range(2 * nsc):
        p = eliminate_column(xs, zs, sg, nrows, nq, e0 + k // 2, k % 2 == 1, pivmask, track)
        if p >= 0:
            pivmask[p >> 6] |= bit(p)
            piv[npiv] = p
            npiv += 1
    remove = np.empty(npiv, dtype=np.int64)
    nremove = 0
    dropped = 0
    for i in range(npiv):
        p = piv[i]
        pw = p >> 6
        pb = bit(p)
        if not retain:
            remove[nremove] = p
            nremove += 1
            continue
        for k in range(nsc):
            xs[e0 + k, pw] &= ~pb
            zs[e0 + k, pw] &= ~pb
        empty = True
        for c in range(n):
            if (xs[c, pw] & pb) != ZERO or (zs[c, pw] & pb) != ZERO:
                empty = False
                break
        if empty:
            remove[nremove] = p
            nremove += 1
            dropped += 1
    remove = np.sort(remove[:nremove])[::-1]
    for i in range(nremove):
        nrows = remove_row(xs, zs, sg, tg, nrows, nq, remove[i])
    for k in range(nsc):
        xs[e0 + k, :] = ZERO
        zs[e0 + k, :] = ZERO
    return nrows, dropped


# ---------------------------------------------------------------- linear algebra


@njit(cache=True)
def rank_insert(xs, zs, qubits, nw, basis, pivmap, rank):
    """Insert the X and Z columns of ``qubits`` (bit-vectors over rows) into an
    xor-basis keyed by lowest set bit. Returns the new rank."""
    tmp = np.empty(nw, dtype=np.uint64)
    for qi in range(qubits.shape[0]):
        q = qubits[qi]
        for side in range(2):
            if side == 0:
                for w in range(nw):
                    tmp[w] = xs[q, w]
            else:
                for w in range(nw):
                    tmp[w] = zs[q, w]
            start = 0
            while True:
                b = -1
                for w in range(start, nw):
                    if tmp[w] != ZERO:
                        b = w * 64 + lsb(tmp[w])
                        start = w
                        break
                if b < 0:
                    break
                j = pivmap[b]
                if j < 0:
                    for w in range(nw):
                        basis[rank, w] = tmp[w]
                    pivmap[b] = rank
                    rank += 1
                    break
                for w in range(start, nw):
                    tmp[w] ^= basis[j, w]
    return rank


@njit(cache=True)
def independent_rows(xs, zs, tg, nrows, n):
    """Greedy independent subset of rows (as system Paulis): untagged rows are
    considered first, then tagged rows, each group in index order."""
    nw = (nrows + 63) >> 6
    wc = (2 * n + 63) >> 6
    rm = np.zeros((max(nrows, 1), wc), dtype=np.uint64)
    for c in range(n):
        cx = 2 * c
        cz = 2 * c + 1
        for w in range(nw):
            word = xs[c, w]
            while word != ZERO:
                r = w * 64 + lsb(word)
                rm[r, cx >> 6] |= bit(cx)
                word &= word - ONE
            word = zs[c, w]
            while word != ZERO:
                r = w * 64 + lsb(word)
                rm[r, cz >> 6] |= bit(cz)
                word &= word - ONE
    keep = np.zeros(nrows, dtype=np.bool_)
    basis = np.zeros((min(nrows, 2 * n) + 1, wc), dtype=np.uint64)
    pivmap = np.full(wc * 64, -1, dtype=np.int64)
    rank = 0
    tmp = np.empty(wc, dtype=np.uint64)
    for group in range(2):
        for r in range(nrows):
            tagged = (tg[r >> 6] & bit(r)) != ZERO
            if tagged != (group == 1):
                continue
            for w in range(wc):
                tmp[w] = rm[r, w]
            start = 0
            while True:
                b = -1
                for w in range(start, wc):
                    if tmp[w] != ZERO:
                        b = w * 64 + lsb(tmp[w])
                        start = w
                        break
                if b < 0:
                    break
                j = pivmap[b]
                if j < 0:
                    for w in range(wc):
                        basis[rank, w] = tmp[w]
                    pivmap[b] = rank
                    rank += 1
                    keep[r] = True
                    break
                for w in range(start, wc):
                    tmp[w] ^= basis[j, w]
    return keep


@njit(cache=True)
def compact_rows(xs, zs, sg, tg, nrows, nq, keep):
    """Keep only rows with ``keep[r]`` (order preserved). Returns new nrows."""
    nw = (nrows + 63) >> 6
    newidx = np.full(nrows, -1, dtype=np.int64)
    k = 0
    for r in range(nrows):
        if keep[r]:
            newidx[r] = k
            k += 1
    buf = np.zeros(nw, dtype=np.uint64)
    for c in range(-2, 2 * nq):
        if c == -2:
            src = sg
        elif c == -1:
            src = tg
        elif c % 2 == 0:
            src = xs[c // 2]
        else:
            src = zs[c // 2]
        for w in range(nw):
            buf[w] = ZERO
        for w in range(nw):
            word = src[w]
            while word != ZERO:
                r = w * 64 + lsb(word)
                word &= word - ONE
                t = newidx[r]
                if t >= 0:
                    buf[t >> 6] |= bit(t)
        for w in range(nw):
            src[w] = buf[w]
    return k


@njit(cache=True)
def normalize(xs, zs, sg, tg, nrows, n):
    """Drop dependent rows. Returns (nrows, dropped_untagged, dropped_tagged)."""
    keep = independent_rows(xs, zs, tg, nrows, n)
    du = 0
    dt = 0
    for r in range(nrows):
        if not keep[r]:
            if (tg[r >> 6] & bit(r)) != ZERO:
                dt += 1
            else:
                du += 1
    nrows = compact_rows(xs, zs, sg, tg, nrows, n, keep)
    return nrows, du, dt


# ---------------------------------------------------------------- one slot


@njit(cache=True)
def run_events(xs, zs, sg, tg, nrows, n, cap, order, u_meas, p, u_noise, qn, nkinds,
               u_qe, qe, qkinds, outcomes, track, counts):
    """Per-site measurement / noise / QE draws for one inter-layer slot.

    counts[0..2] accumulate measurement, noise and QE events; returns
    ``(nrows, x_increment)``.
    """
    xinc = 0
    for s in range(n):
        for o in range(3):
            op = order[o]
            if op == 0:
                if u_meas[s] < p:
                    if nrows + 1 > cap:
                        nrows, du, dt = normalize(xs, zs, sg, tg, nrows, n)
                        xinc += du
                    nrows, br = measure_hot(xs, zs, sg, tg, nrows, n, s, outcomes[s], track)
                    counts[0] += 1
            elif op == 1:
                for k in range(nkinds.shape[0]):
                    if u_noise[k, s] < qn[k]:
                        if nrows + 2 > cap:
                            nrows, du, dt = normalize(xs, zs, sg, tg, nrows, n)
                            xinc += du
                        nrows, d = channel(xs, zs, sg, tg, nrows, n, s, nkinds[k], False, track)
                        counts[1] += 1
            else:
                for k in range(qkinds.shape[0]):
                    if u_qe[k, s] < qe[k]:
                        if nrows + 2 > cap:
                            nrows, du, dt = normalize(xs, zs, sg, tg, nrows, n)
                            xinc += du
                        nrows, d = channel(xs, zs, sg, tg, nrows, n, s, qkinds[k], True, track)
                        xinc += d
                        counts[2] += 1
    return nrows, xinc
