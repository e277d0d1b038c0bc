"""Stabilizer tableau with bit-packed generator rows.

A :class:`Tableau` stores up to ``64 * W`` Pauli rows over ``n`` system qubits
plus two scratch columns used by channel dilations. :class:`StabilizerState`
is an exact (pure or mixed) stabilizer state whose rows are independent and
commuting, with signs tracked.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels as K
from .clifford2 import clifford_table

SCRATCH = 2
_PAULI_CHARS = "IZXY"  # index x*2 + z


def _words(rows: int) -> int:
    return max(1, (rows + 63) // 64)


def _bit(r: int) -> np.uint64:
    return np.uint64(1 << (r & 63))


@dataclass
class Tableau:
    """Bit-packed list of signed Pauli rows.

    Parameters
    ----------
    n : int
        Number of system qubits.
    capacity : int, optional
        Initial row capacity (rounded up to a multiple of 64).
    track : bool
        Whether signs are updated by gates and row products.
    """

    n: int
    capacity: int | None = None
    track: bool = True
    nrows: int = 0
    xs: np.ndarray = field(init=False, repr=False)
    zs: np.ndarray = field(init=False, repr=False)
    sg: np.ndarray = field(init=False, repr=False)
    tg: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = _words(self.capacity if self.capacity is not None else 2 * self.n + 4)
        self.xs = np.zeros((self.n + SCRATCH, w), dtype=np.uint64)
        self.zs = np.zeros((self.n + SCRATCH, w), dtype=np.uint64)
        self.sg = np.zeros(w, dtype=np.uint64)
        self.tg = np.zeros(w, dtype=np.uint64)

    # ------------------------------------------------------------ storage
    @property
    def cap(self) -> int:
        return self.sg.shape[0] * 64

    @property
    def nw(self) -> int:
        return (self.nrows + 63) >> 6

    def reserve(self, extra: int) -> None:
        """Grow storage so that ``nrows + extra`` rows fit."""
        need = self.nrows + extra
        if need <= self.cap:
            return
        w = max(_words(need), 2 * self.sg.shape[0])
        pad = w - self.sg.shape[0]
        self.xs = np.ascontiguousarray(np.pad(self.xs, ((0, 0), (0, pad))))
        self.zs = np.ascontiguousarray(np.pad(self.zs, ((0, 0), (0, pad))))
        self.sg = np.pad(self.sg, (0, pad))
        self.tg = np.pad(self.tg, (0, pad))

    def copy(self):
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        for name in ("xs", "zs", "sg", "tg"):
            setattr(new, name, getattr(self, name).copy())
        return new

    # ------------------------------------------------------------ rows
    def append_row(self, x: Sequence[int], z: Sequence[int], sign: int = 0, tag: int = 0) -> int:
        self.reserve(1)
        r = self.nrows
        w, b = r >> 6, _bit(r)
        for q in np.flatnonzero(np.asarray(x, dtype=np.uint8)):
            self.xs[q, w] |= b
        for q in np.flatnonzero(np.asarray(z, dtype=np.uint8)):
            self.zs[q, w] |= b
        if sign:
            self.sg[w] |= b
        if tag:
            self.tg[w] |= b
        self.nrows += 1
        return r

    def append_pauli(self, s: str, tag: int = 0) -> int:
        sign, x, z = parse_pauli(s, self.n)
        return self.append_row(x, z, sign, tag)

    def row_bits(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(x, z, sign) as uint8 arrays of shape (nrows, n), (nrows, n), (nrows,)."""
        nw = self.nw
        x = np.unpackbits(self.xs[: self.n, :nw].view(np.uint8), axis=1, bitorder="little")
        z = np.unpackbits(self.zs[: self.n, :nw].view(np.uint8), axis=1, bitorder="little")
        s = np.unpackbits(self.sg[:nw].view(np.uint8), bitorder="little")
        r = self.nrows
        return x[:, :r].T.copy(), z[:, :r].T.copy(), s[:r].copy()

    def tags(self) -> np.ndarray:
        t = np.unpackbits(self.tg[: self.nw].view(np.uint8), bitorder="little")
        return t[: self.nrows].astype(bool)

    def to_strings(self) -> list[str]:
        x, z, s = self.row_bits()
        return [
            ("-" if s[r] else "+") + "".join(_PAULI_CHARS[2 * x[r, q] + z[r, q]] for q in range(self.n))
            for r in range(self.nrows)
        ]

    # ------------------------------------------------------------ gates
    def h(self, q: int) -> None:
        K.apply_h(self.xs, self.zs, self.sg, self.nw, q, self.track)

    def s(self, q: int) -> None:
        K.apply_s(self.xs, self.zs, self.sg, self.nw, q, self.track)

    def cnot(self, c: int, t: int) -> None:
        K.apply_cnot(self.xs, self.zs, self.sg, self.nw, c, t, self.track)

    def swap(self, a: int, b: int) -> None:
        K.apply_swap(self.xs, self.zs, self.nw, a, b)

    def apply_layer(self, qa: np.ndarray, qb: np.ndarray, gidx: np.ndarray) -> None:
        """Apply two-qubit Cliffords ``gidx[i]`` on pairs ``(qa[i], qb[i])``."""
        tab = clifford_table()
        K.apply_layer(self.xs, self.zs, self.sg, self.nw,
                      np.asarray(qa, dtype=np.int64), np.asarray(qb, dtype=np.int64),
                      np.asarray(gidx, dtype=np.int64), tab.mats, tab.anfs, self.track)

    # ------------------------------------------------------------ ranks
    def column_rank(self, qubits: Iterable[int]) -> int:
        """GF(2) rank of the rows restricted to ``qubits``."""
        qs = np.asarray(list(qubits), dtype=np.int64)
        if qs.size == 0 or self.nrows == 0:
            return 0
        nw = self.nw
        basis = np.zeros((min(2 * qs.size, self.nrows) + 1, nw), dtype=np.uint64)
        pivmap = np.full(nw * 64, -1, dtype=np.int64)
        return int(K.rank_insert(self.xs, self.zs, qs, nw, basis, pivmap, 0))

    def rank(self) -> int:
        return self.column_rank(range(self.n))

    def subsystem_entropy(self, region: Iterable[int]) -> int:
        """``|A| - rank(V) + rank(V restricted to the complement of A)``.

        For a stabilizer group this is the von Neumann entropy (in bits) of the
        reduced state on ``A``; dependent rows are allowed.
        """
        a = set(int(q) for q in region)
        comp = [q for q in range(self.n) if q not in a]
        return len(a) - self.rank() + self.column_rank(comp)


# ---------------------------------------------------------------- Pauli helpers


def parse_pauli(s: str, n: int) -> tuple[int, np.ndarray, np.ndarray]:
    """``"+XZI"`` / ``"-YY"`` -> (sign bit, x bits, z bits)."""
    sign = 0
    if s and s[0] in "+-":
        sign = int(s[0] == "-")
        s = s[1:]
    if len(s) != n:
        raise ValueError(f"Pauli string {s!r} has length {len(s)}, expected {n}")
    x = np.array([c in "XY" for c in s], dtype=np.uint8)
    z = np.array([c in "ZY" for c in s], dtype=np.uint8)
    bad = set(s) - set("IXYZ")
    if bad:
        raise ValueError(f"invalid Pauli characters {sorted(bad)}")
    return sign, x, z


def pauli_mul(x1, z1, e1, x2, z2, e2):
    """Product of ``i**e1 P1`` and ``i**e2 P2`` (Y convention for x=z=1).

    Returns ``(x, z, e)`` with the phase exponent ``e`` mod 4.
    """
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int64) for a in (x1, z1, x2, z2))
    g = np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where(x1 == 1, z2 * (2 * x2 - 1), np.where(z1 == 1, x2 * (1 - 2 * z2), 0)),
    )
    return x1 ^ x2, z1 ^ z2, (e1 + e2 + int(g.sum())) % 4


def gf2_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Solve ``c @ a = b`` over GF(2) for a row vector ``c``; None if no solution."""
    a = np.asarray(a, dtype=np.uint8) & 1
    m, k = a.shape
    aug = np.concatenate([a.T, np.asarray(b, dtype=np.uint8).reshape(k, 1) & 1], axis=1)
    piv_cols = []
    r = 0
    for c in range(m):
        rows = np.flatnonzero(aug[r:, c]) + r
        if rows.size == 0:
            continue
        p = rows[0]
        aug[[r, p]] = aug[[p, r]]
        hit = np.flatnonzero(aug[:, c])
        hit = hit[hit != r]
        aug[hit] ^= aug[r]
        piv_cols.append(c)
        r += 1
        if r == k:
            break
    if aug[r:, -1].any():
        return None
    sol = np.zeros(m, dtype=np.uint8)
    for i, c in enumerate(piv_cols):
        sol[c] = aug[i, -1]
    return sol


# ---------------------------------------------------------------- exact states


class StabilizerState(Tableau):
    """Exact stabilizer state: independent, commuting, signed rows.

    Rows with fewer than ``n`` generators describe a mixed state
    ``2**-n prod(I + g)``.
    """

    @classmethod
    def zero(cls, n: int, capacity: int | None = None) -> "StabilizerState":
        st = cls(n, capacity=capacity, track=True)
        for q in range(n):
            z = np.zeros(n, dtype=np.uint8)
            z[q] = 1
            st.append_row(np.zeros(n, dtype=np.uint8), z)
        return st

    @classmethod
    def maximally_mixed(cls, n: int) -> "StabilizerState":
        return cls(n, track=True)

    @classmethod
    def from_strings(cls, rows: Sequence[str], n: int | None = None) -> "StabilizerState":
        if n is None:
            n = len(rows[0].lstrip("+-"))
        st = cls(n, capacity=max(len(rows), 1), track=True)
        for s in rows:
            st.append_pauli(s)
        return st

    def _pivot_x(self, q: int) -> int:
        col = self.xs[q, : self.nw]
        nz = np.flatnonzero(col)
        if nz.size == 0:
            return -1
        w = int(nz[0])
        v = int(col[w])
        return w * 64 + ((v & -v).bit_length() - 1)

    def z_expectation_sign(self, q: int) -> int | None:
        """Sign bit of Z_q if +-Z_q is in the group, else None."""
        x, z, s = self.row_bits()
        target_x = np.zeros(self.n, dtype=np.uint8)
        target_z = np.zeros(self.n, dtype=np.uint8)
        target_z[q] = 1
        if self.nrows == 0:
            return None
        mat = np.concatenate([x, z], axis=1)
        sol = gf2_solve(mat, np.concatenate([target_x, target_z]))
        if sol is None:
            return None
        px = np.zeros(self.n, dtype=np.int64)
        pz = np.zeros(self.n, dtype=np.int64)
        e = 0
        for r in np.flatnonzero(sol):
            px, pz, e = pauli_mul(px, pz, e, x[r], z[r], 2 * int(s[r]))
        if e % 2:
            raise RuntimeError("non-Hermitian product: rows do not commute")
        return e // 2

    def measure_z(self, q: int, rng: np.random.Generator | None = None,
                  outcome: int | None = None) -> tuple[int, str]:
        """Projective Z measurement on qubit ``q``.

        Returns ``(outcome, branch)`` with branch ``"random"`` (an anticommuting
        generator exists), ``"determined"`` (Z_q already in the group) or
        ``"mixed"`` (Z_q commutes but is not in the group; appended). A forced
        ``outcome`` is honoured only on random branches.
        """
        def draw():
            if outcome is not None:
                return int(outcome)
            return int((rng if rng is not None else np.random.default_rng()).integers(2))

        p = self._pivot_x(q)
        if p >= 0:
            o = draw()
            self.reserve(0)
            K.measure_hot(self.xs, self.zs, self.sg, self.tg, self.nrows, self.n, q, o, True)
            return o, "random"
        s = self.z_expectation_sign(q)
        if s is not None:
            return s, "determined"
        o = draw()
        self.reserve(1)
        z = np.zeros(self.n, dtype=np.uint8)
        z[q] = 1
        self.append_row(np.zeros(self.n, dtype=np.uint8), z, o)
        return o, "mixed"

    def canonical(self) -> "StabilizerState":
        """Copy with rows reduced to a row-echelon basis (signs kept)."""
        st = self.copy()
        excluded = np.zeros(max(st.nw, 1), dtype=np.uint64)
        piv = []
        for q in range(st.n):
            for is_z in (False, True):
                p = K.eliminate_column(st.xs, st.zs, st.sg, st.nrows, st.n, q, is_z, excluded, True)
                if p >= 0:
                    excluded[p >> 6] |= _bit(p)
                    piv.append(p)
        keep = np.zeros(st.nrows, dtype=np.bool_)
        keep[piv] = True
        st.nrows = int(K.compact_rows(st.xs, st.zs, st.sg, st.tg, st.nrows, st.n, keep))
        # compaction keeps the original relative order; put rows in pivot order
        slot = {p: i for i, p in enumerate(sorted(piv))}
        _permute_rows(st, [slot[p] for p in piv])
        return st

    def trace_out(self, qubits: Iterable[int]) -> "StabilizerState":
        """Copy with the listed qubits traced out (left maximally mixed).

        Keeps the subgroup of generators acting trivially on ``qubits``.
        """
        st = self.copy()
        excluded = np.zeros(max(st.nw, 1), dtype=np.uint64)
        piv = []
        for q in qubits:
            for is_z in (False, True):
                p = K.eliminate_column(st.xs, st.zs, st.sg, st.nrows, st.n, q, is_z, excluded, True)
                if p >= 0:
                    excluded[p >> 6] |= _bit(p)
                    piv.append(p)
        for p in sorted(piv, reverse=True):
            st.nrows = int(K.remove_row(st.xs, st.zs, st.sg, st.tg, st.nrows, st.n, p))
        return st

    def entropy(self, region: Iterable[int]) -> int:
        return self.subsystem_entropy(region)


MEASURE_CASES = {"determined": "deterministic", "mixed": "random_new", "random": "random_replace"}


def new_state(n: int, kind: str = "pure_zero") -> StabilizerState:
    """``pure_zero`` gives generators Z_0..Z_{n-1}; ``maximally_mixed`` has none."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if kind == "pure_zero":
        return StabilizerState.zero(n)
    if kind == "maximally_mixed":
        return StabilizerState.maximally_mixed(n)
    raise ValueError(f"unknown initial state kind {kind!r}")


def apply_clifford(state: Tableau, gate, targets: Sequence[int]) -> Tableau:
    """Apply ``H``, ``P`` (phase), ``CNOT``, ``SWAP`` or a two-qubit group
    element (an ``int`` index into :func:`clifford_table`) in place."""
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"repeated target indices {targets}")
    if any(t < 0 or t >= state.n for t in targets):
        raise ValueError(f"targets {targets} out of range for n={state.n}")
    one = {"H": state.h, "P": state.s, "S": state.s}
    two = {"CNOT": state.cnot, "SWAP": state.swap}
    if isinstance(gate, str):
        if gate in one and len(targets) == 1:
            one[gate](targets[0])
        elif gate in two and len(targets) == 2:
            two[gate](*targets)
        else:
            raise ValueError(f"gate {gate!r} cannot act on {len(targets)} targets")
    else:
        if len(targets) != 2:
            raise ValueError("two-qubit Clifford needs two targets")
        state.apply_layer(np.array([targets[0]]), np.array([targets[1]]), np.array([int(gate)]))
    return state


def measure_z(state: StabilizerState, q: int, rng=None, outcome=None):
    """Returns ``(state, outcome, case)`` with case ``deterministic``,
    ``random_new`` or ``random_replace``; the state is updated in place."""
    o, branch = state.measure_z(q, rng=rng, outcome=outcome)
    return state, o, MEASURE_CASES[branch]


def gaussian_eliminate(state: Tableau, column_priority: Sequence[int] | None = None):
    """Row-reduce so each prioritized (x then z) column has at most one pivot row.

    Returns ``(state, zero_rows)``: a reduced copy with pivot rows first and the
    indices (in the copy) of rows that became identity on the system.
    """
    st = state.copy()
    order = list(column_priority) if column_priority is not None else []
    order += [q for q in range(st.n) if q not in order]
    excluded = np.zeros(max(st.nw, 1), dtype=np.uint64)
    piv = []
    for q in order:
        for is_z in (False, True):
            p = K.eliminate_column(st.xs, st.zs, st.sg, st.nrows, st.n, q, is_z, excluded, st.track)
            if p >= 0:
                excluded[p >> 6] |= _bit(p)
                piv.append(p)
    x, z, _ = st.row_bits()
    zero = [r for r in range(st.nrows) if not (x[r].any() or z[r].any())]
    rest = [r for r in range(st.nrows) if r not in piv and r not in zero]
    _permute_rows(st, piv + rest + zero)
    return st, list(range(len(piv) + len(rest), st.nrows))


def _permute_rows(st: Tableau, order: Sequence[int]) -> None:
    x, z, s = st.row_bits()
    t = st.tags()
    nrows = st.nrows
    st.xs[:] = 0
    st.zs[:] = 0
    st.sg[:] = 0
    st.tg[:] = 0
    st.nrows = 0
    for r in order:
        st.append_row(x[r], z[r], s[r], t[r])
    assert st.nrows == nrows


def trace_out(state: StabilizerState, region: Iterable[int]) -> StabilizerState:
    """State on the kept qubits (in increasing order) after tracing ``region``."""
    region = sorted(set(int(q) for q in region))
    kept = [q for q in range(state.n) if q not in region]
    reduced = state.trace_out(region)
    x, z, s = reduced.row_bits()
    out = StabilizerState(len(kept), capacity=max(reduced.nrows, 1), track=state.track)
    for r in range(reduced.nrows):
        out.append_row(x[r, kept], z[r, kept], s[r])
    return out


def entropy_region(state: Tableau, region: Iterable[int]) -> int:
    """Von Neumann entropy in bits of the reduced state on ``region``."""
    return state.subsystem_entropy(region)
