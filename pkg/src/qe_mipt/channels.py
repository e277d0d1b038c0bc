"""Noise and quantum-enhanced (QE) channels in Stinespring form, and the
ancilla-compressed state used to compute conditional entanglement entropy.

A :class:`CompressedState` keeps only the system part of every generator of
the joint system+ancilla stabilizer group. Its rows span the projection ``V``
of that group onto the system, may be linearly dependent, and need not
commute. The conditional entropy of a system region ``M`` given the ancilla
register is ``|M| - rank(V) + rank(V restricted to M^c)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._backend import kernels as K
from .stab_core import StabilizerState, Tableau, gaussian_eliminate

KIND_CODES = {"dephasing": 0, "resetting": 1, "depolarizing": 2}
ROLES = ("noise", "qe")


@dataclass(frozen=True)
class ChannelKind:
    """A dilated single-site channel.

    ``tag`` selects the coupling (dephasing: CNOT onto a fresh |0>; resetting:
    SWAP with a fresh |0>; depolarizing: SWAP with one half of a fresh Bell
    pair). ``role='noise'`` traces the fresh qubits out, ``role='qe'`` keeps
    them as ancillas.
    """

    tag: str
    role: str = "noise"

    def __post_init__(self):
        if self.tag not in KIND_CODES:
            raise ValueError(f"unknown channel kind {self.tag!r}")
        if self.role not in ROLES:
            raise ValueError(f"unknown channel role {self.role!r}")

    @property
    def code(self) -> int:
        return KIND_CODES[self.tag]

    @property
    def fresh_qubits(self) -> int:
        return 2 if self.tag == "depolarizing" else 1


def _kind(kind, role: str) -> ChannelKind:
    if isinstance(kind, ChannelKind):
        if kind.role != role:
            raise ValueError(f"expected a {role} channel, got role {kind.role!r}")
        return kind
    return ChannelKind(str(kind), role)


class CompressedState(Tableau):
    """System-only rows of the joint system+ancilla stabilizer group.

    Attributes
    ----------
    x : int
        Generators discarded because they were supported on ancillas only.
        Together with the ancilla count this gives ``S(A) = |A| - x`` as long as
        no measured ``Z_q`` was already in the projected group (the rows alone
        cannot tell whether its ancilla partner was trivial).
    n_ancilla : int
        Ancilla qubits created so far.
    compact_at : int
        Row count that triggers :meth:`normalize_rows` before a new event.
    """

    def __init__(self, n: int, capacity: int | None = None, track: bool = False,
                 compact_at: int | None = None):
        cap = capacity if capacity is not None else 4 * n + 8
        super().__init__(n, capacity=cap, track=track)
        self.x = 0
        self.n_ancilla = 0
        self.compact_at = compact_at if compact_at is not None else max(self.cap - 2, 2 * n + 2)

    @classmethod
    def from_state(cls, state: StabilizerState, track: bool = False) -> "CompressedState":
        cs = cls(state.n, capacity=max(state.cap, 4 * state.n + 8), track=track)
        x, z, s = state.row_bits()
        for r in range(state.nrows):
            cs.append_row(x[r], z[r], s[r])
        return cs

    @classmethod
    def initial(cls, n: int, kind: str = "pure_zero", **kw) -> "CompressedState":
        cs = cls(n, **kw)
        if kind == "pure_zero":
            for q in range(n):
                cs.zs[q, q >> 6] |= np.uint64(1 << (q & 63))
            cs.nrows = n
        elif kind != "maximally_mixed":
            raise ValueError(f"unknown initial state kind {kind!r}")
        return cs

    def _room(self, extra: int) -> None:
        if self.nrows + extra > self.compact_at:
            self.normalize_rows()
        self.reserve(extra)

    # ------------------------------------------------------------ events
    def measure(self, q: int, outcome: int = 0) -> int:
        """Z measurement on site ``q``; returns 3 if an anticommuting row was
        replaced, 2 if ``Z_q`` was appended."""
        self._room(1)
        self.nrows, branch = K.measure_hot(self.xs, self.zs, self.sg, self.tg, self.nrows,
                                           self.n, q, int(outcome), self.track)
        return int(branch)

    def apply_noise(self, site: int, kind) -> None:
        k = _kind(kind, "noise")
        self._room(2)
        self.nrows, _ = K.channel(self.xs, self.zs, self.sg, self.tg, self.nrows, self.n,
                                  site, k.code, False, self.track)

    def apply_qe(self, site: int, kind) -> int:
        """QE event; returns the number of ancilla-only rows discarded."""
        k = _kind(kind, "qe")
        self._room(2)
        self.nrows, dropped = K.channel(self.xs, self.zs, self.sg, self.tg, self.nrows, self.n,
                                        site, k.code, True, self.track)
        self.x += int(dropped)
        self.n_ancilla += k.fresh_qubits
        return int(dropped)

    def normalize_rows(self) -> int:
        """Remove dependent rows (zero rows included). Dependent untagged rows
        are absorbed into ``x``; returns the number of rows removed."""
        before = self.nrows
        self.nrows, du, _ = K.normalize(self.xs, self.zs, self.sg, self.tg, self.nrows, self.n)
        self.x += int(du)
        return before - self.nrows

    # ------------------------------------------------------------ entropies
    def cee(self, region: Iterable[int]) -> int:
        """``S(M|A)`` in bits for system region ``M``."""
        return self.subsystem_entropy(region)

    def ancilla_entropy(self) -> int:
        return self.n_ancilla - self.x


def apply_noise_at(state: CompressedState, site: int, kind) -> CompressedState:
    state.apply_noise(site, kind)
    return state


def apply_qe_at(state: CompressedState, site: int, kind) -> CompressedState:
    state.apply_qe(site, kind)
    return state


def normalize_rows(state: CompressedState) -> CompressedState:
    state.normalize_rows()
    return state


def cee(state: CompressedState, region: Iterable[int]) -> int:
    return state.cee(region)


def cee_by_elimination(state: CompressedState, region: Iterable[int]) -> int:
    """``|M| - y`` by explicit elimination: reduce with ``M^c`` columns first,
    set aside rows keeping ``M^c`` support and count the independent rest."""
    m = sorted(set(int(q) for q in region))
    mc = [q for q in range(state.n) if q not in m]
    reduced, zero = gaussian_eliminate(state, mc)
    x, z, _ = reduced.row_bits()
    inside = [r for r in range(reduced.nrows)
              if r not in zero and not (x[r, mc].any() or z[r, mc].any())]
    sub = StabilizerState(state.n, capacity=max(len(inside), 1), track=False)
    for r in inside:
        sub.append_row(x[r], z[r])
    return len(m) - sub.rank()
