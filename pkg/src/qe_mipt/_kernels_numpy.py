"""Pure-numpy kernels with the same signatures and semantics as
``_kernels_numba``. Loops run over qubit columns or rows; the word axis is
vectorized."""
import numpy as np

ZERO = np.uint64(0)
ONE = np.uint64(1)
ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


def lsb(w):
    w = int(w)
    return (w & -w).bit_length() - 1


def bit(r):
    return np.uint64(1 << (int(r) & 63))


def _first_set(words):
    nz = np.flatnonzero(words)
    if nz.size == 0:
        return -1
    w = int(nz[0])
    return w * 64 + lsb(words[w])


def _set_bits(words):
    """Row indices of set bits in a packed word array, ascending."""
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")
    return np.flatnonzero(bits)


# ---------------------------------------------------------------- gates


def apply_layer(xs, zs, sg, nw, qa, qb, gidx, mats, anfs, track):
    for a, b, g in zip(qa, qb, gidx):
        m = mats[g]
        f = anfs[g]
        v0 = xs[a, :nw].copy()
        v1 = zs[a, :nw].copy()
        v2 = xs[b, :nw].copy()
        v3 = zs[b, :nw].copy()
        xs[a, :nw] = (v0 & m[0, 0]) ^ (v1 & m[0, 1]) ^ (v2 & m[0, 2]) ^ (v3 & m[0, 3])
        zs[a, :nw] = (v0 & m[1, 0]) ^ (v1 & m[1, 1]) ^ (v2 & m[1, 2]) ^ (v3 & m[1, 3])
        xs[b, :nw] = (v0 & m[2, 0]) ^ (v1 & m[2, 1]) ^ (v2 & m[2, 2]) ^ (v3 & m[2, 3])
        zs[b, :nw] = (v0 & m[3, 0]) ^ (v1 & m[3, 1]) ^ (v2 & m[3, 2]) ^ (v3 & m[3, 3])
        if track:
            p3 = v0 & v1
            p5 = v0 & v2
            p6 = v1 & v2
            p7 = p3 & v2
            lo = ((v0 & f[1]) ^ (v1 & f[2]) ^ (p3 & f[3]) ^ (v2 & f[4])
                  ^ (p5 & f[5]) ^ (p6 & f[6]) ^ (p7 & f[7]))
            hi = (f[8] ^ (v0 & f[9]) ^ (v1 & f[10]) ^ (p3 & f[11]) ^ (v2 & f[12])
                  ^ (p5 & f[13]) ^ (p6 & f[14]) ^ (p7 & f[15]))
            sg[:nw] ^= lo ^ (v3 & hi)


def apply_h(xs, zs, sg, nw, a, track):
    x = xs[a, :nw].copy()
    z = zs[a, :nw].copy()
    if track:
        sg[:nw] ^= x & z
    xs[a, :nw] = z
    zs[a, :nw] = x


def apply_s(xs, zs, sg, nw, a, track):
    x = xs[a, :nw]
    if track:
        sg[:nw] ^= x & zs[a, :nw]
    zs[a, :nw] ^= x


def apply_cnot(xs, zs, sg, nw, c, t, track):
    xc = xs[c, :nw]
    zt = zs[t, :nw]
    if track:
        sg[:nw] ^= xc & zt & ~(xs[t, :nw] ^ zs[c, :nw])
    xs[t, :nw] ^= xc
    zs[c, :nw] ^= zt


def apply_swap(xs, zs, nw, a, b):
    xs[[a, b], :nw] = xs[[b, a], :nw]
    zs[[a, b], :nw] = zs[[b, a], :nw]


# ---------------------------------------------------------------- rows


def rowmul(xs, zs, sg, nq, p, mask, nw, track):
    pw = p >> 6
    pb = bit(p)
    px = (xs[:nq, pw] & pb) != ZERO
    pz = (zs[:nq, pw] & pb) != ZERO
    if track:
        c0 = np.zeros(nw, dtype=np.uint64)
        c1 = np.zeros(nw, dtype=np.uint64)
        for c in np.flatnonzero(px | pz):
            x2 = xs[c, :nw] & mask
            z2 = zs[c, :nw] & mask
            if px[c] and pz[c]:
                plus, minus = z2 & ~x2, x2 & ~z2
            elif px[c]:
                plus, minus = z2 & x2, z2 & ~x2
            else:
                plus, minus = x2 & ~z2, x2 & z2
            c1 ^= c0 & plus
            c0 ^= plus
            c1 ^= ~c0 & minus
            c0 ^= minus
        flip = ALL if (sg[pw] & pb) != ZERO else ZERO
        sg[:nw] ^= mask & (c1 ^ flip)
    xs[np.flatnonzero(px), :nw] ^= mask
    zs[np.flatnonzero(pz), :nw] ^= mask


def clear_row(xs, zs, sg, tg, nq, r):
    rw = r >> 6
    nb = ~bit(r)
    xs[:nq, rw] &= nb
    zs[:nq, rw] &= nb
    sg[rw] &= nb
    tg[rw] &= nb


def _copy_bit(arr, src, dst):
    """Copy bit ``src`` into bit ``dst`` along the last axis of ``arr``."""
    sw, sb = src >> 6, bit(src)
    dw, db = dst >> 6, bit(dst)
    on = (arr[..., sw] & sb) != ZERO
    arr[..., dw] = np.where(on, arr[..., dw] | db, arr[..., dw] & ~db)


def remove_row(xs, zs, sg, tg, nrows, nq, p):
    last = nrows - 1
    if p != last:
        _copy_bit(xs[:nq], last, p)
        _copy_bit(zs[:nq], last, p)
        _copy_bit(sg, last, p)
        _copy_bit(tg, last, p)
    clear_row(xs, zs, sg, tg, nq, last)
    return last


def first_row(col, nw, excluded):
    return _first_set(col[:nw] & ~excluded[:nw])


def eliminate_column(xs, zs, sg, nrows, nq, q, is_z, excluded, track):
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


def measure_hot(xs, zs, sg, tg, nrows, nq, q, outcome, track):
    nw = (nrows + 63) >> 6
    p = _first_set(xs[q, :nw])
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


def channel(xs, zs, sg, tg, nrows, n, site, kind, retain, track):
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
    piv = []
    pivmask = np.zeros(nw, dtype=np.uint64)
    for k in range(2 * nsc):
        p = eliminate_column(xs, zs, sg, nrows, nq, e0 + k // 2, k % 2 == 1, pivmask, track)
        if p >= 0:
            pivmask[p >> 6] |= bit(p)
            piv.append(p)
    remove = []
    dropped = 0
    for p in piv:
        if not retain:
            remove.append(p)
            continue
        pw, pb = p >> 6, bit(p)
        xs[e0:e0 + nsc, pw] &= ~pb
        zs[e0:e0 + nsc, pw] &= ~pb
        if not ((xs[:n, pw] & pb).any() or (zs[:n, pw] & pb).any()):
            remove.append(p)
            dropped += 1
    for p in sorted(remove, reverse=True):
        nrows = remove_row(xs, zs, sg, tg, nrows, nq, p)
    xs[e0:e0 + nsc, :] = ZERO
    zs[e0:e0 + nsc, :] = ZERO
    return nrows, dropped


# ---------------------------------------------------------------- linear algebra


def rank_insert(xs, zs, qubits, nw, basis, pivmap, rank):
    for q in qubits:
        for src in (xs, zs):
            tmp = src[q, :nw].copy()
            while True:
                b = _first_set(tmp)
                if b < 0:
                    break
                j = pivmap[b]
                if j < 0:
                    basis[rank, :nw] = tmp
                    pivmap[b] = rank
                    rank += 1
                    break
                tmp ^= basis[j, :nw]
    return rank


def _row_major(xs, zs, nrows, n):
    """(nrows, 2n) uint8 matrix with columns x_0, z_0, x_1, z_1, ..."""
    nw = (nrows + 63) >> 6
    xb = np.unpackbits(xs[:n, :nw].view(np.uint8), axis=1, bitorder="little")[:, :nrows]
    zb = np.unpackbits(zs[:n, :nw].view(np.uint8), axis=1, bitorder="little")[:, :nrows]
    out = np.empty((nrows, 2 * n), dtype=np.uint8)
    out[:, 0::2] = xb.T
    out[:, 1::2] = zb.T
    return out


def independent_rows(xs, zs, tg, nrows, n):
    mat = _row_major(xs, zs, nrows, n)
    tagged = np.zeros(nrows, dtype=bool)
    tagged[_set_bits(tg)[_set_bits(tg) < nrows]] = True
    order = list(np.flatnonzero(~tagged)) + list(np.flatnonzero(tagged))
    keep = np.zeros(nrows, dtype=np.bool_)
    basis = {}
    for r in order:
        v = int.from_bytes(np.packbits(mat[r], bitorder="little").tobytes(), "little")
        while v:
            b = (v & -v).bit_length() - 1
            if b not in basis:
                basis[b] = v
                keep[r] = True
                break
            v ^= basis[b]
    return keep


def compact_rows(xs, zs, sg, tg, nrows, nq, keep):
    nw = (nrows + 63) >> 6
    idx = np.flatnonzero(keep)
    k = idx.size

    def squeeze(words):
        bits = np.unpackbits(words[..., :nw].view(np.uint8), axis=-1, bitorder="little")
        kept = bits[..., idx]
        out = np.zeros(bits.shape[:-1] + (nw * 64,), dtype=np.uint8)
        out[..., :k] = kept
        return np.packbits(out, axis=-1, bitorder="little").view(np.uint64)

    xs[:nq, :nw] = squeeze(xs[:nq])
    zs[:nq, :nw] = squeeze(zs[:nq])
    sg[:nw] = squeeze(sg)
    tg[:nw] = squeeze(tg)
    return k


def normalize(xs, zs, sg, tg, nrows, n):
    keep = independent_rows(xs, zs, tg, nrows, n)
    tagged = np.zeros(nrows, dtype=bool)
    tb = _set_bits(tg)
    tagged[tb[tb < nrows]] = True
    dt = int(np.count_nonzero(~keep & tagged))
    du = int(np.count_nonzero(~keep & ~tagged))
    nrows = compact_rows(xs, zs, sg, tg, nrows, n, keep)
    return nrows, du, dt


# ---------------------------------------------------------------- one slot


def run_events(xs, zs, sg, tg, nrows, n, cap, order, u_meas, p, u_noise, qn, nkinds,
               u_qe, qe, qkinds, outcomes, track, counts):
    xinc = 0
    meas = u_meas < p
    noise = u_noise < qn[:, None]
    qev = u_qe < qe[:, None]
    active = np.flatnonzero(meas | noise.any(axis=0) | qev.any(axis=0))
    for s in active:
        for op in order:
            if op == 0:
                if meas[s]:
                    if nrows + 1 > cap:
                        nrows, du, _ = normalize(xs, zs, sg, tg, nrows, n)
                        xinc += du
                    nrows, _ = measure_hot(xs, zs, sg, tg, nrows, n, s, outcomes[s], track)
                    counts[0] += 1
            elif op == 1:
                for k in range(nkinds.shape[0]):
                    if noise[k, s]:
                        if nrows + 2 > cap:
                            nrows, du, _ = normalize(xs, zs, sg, tg, nrows, n)
                            xinc += du
                        nrows, _ = channel(xs, zs, sg, tg, nrows, n, s, nkinds[k], False, track)
                        counts[1] += 1
            else:
                for k in range(qkinds.shape[0]):
                    if qev[k, s]:
                        if nrows + 2 > cap:
                            nrows, du, _ = normalize(xs, zs, sg, tg, nrows, n)
                            xinc += du
                        nrows, d = channel(xs, zs, sg, tg, nrows, n, s, qkinds[k], True, track)
                        xinc += d
                        counts[2] += 1
    return nrows, xinc
