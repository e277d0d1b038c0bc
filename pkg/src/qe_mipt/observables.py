"""Conditional entanglement observables on a :class:`CompressedState`.

All quantities are built from one primitive: the GF(2) rank of the stored rows
restricted to a set of qubit columns. With ``R = rank(V)``, the conditional
entropy of a region is ``S(X|A) = |X| - R + rank(V restricted to X^c)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ._backend import kernels as K
from .channels import CompressedState
from .circuit_engine import CircuitSpec, run_trajectory

OBSERVABLE_NAMES = ("i3", "cee_half", "cee_full")


@dataclass(frozen=True)
class Partition4:
    """Four disjoint equal-size regions covering the system."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def regions(self):
        return (self.a, self.b, self.c, self.d)

    def rotated(self) -> "Partition4":
        """Cyclic relabeling a -> b -> c -> d -> a."""
        return Partition4(self.d, self.a, self.b, self.c)


def site_order(geometry: str, L: int) -> np.ndarray:
    """Sites in the order used for strip partitions and the half cut
    (column-major on the torus, so consecutive chunks are column strips)."""
    if geometry == "chain":
        return np.arange(L)
    r, c = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    return (r * L + c).T.ravel()


def partition_four(geometry: str, L: int, scheme: str = "strips") -> Partition4:
    """Four contiguous quarters (arcs in 1D, strips or quadrants in 2D).

    2D strips cut the column-major site order into four equal chunks; when
    ``L % 4 == 0`` these are exactly strips of ``L/4`` full columns.
    """
    n = L if geometry == "chain" else L * L
    if n % 4:
        raise ValueError(f"{n} sites cannot be split into four equal regions")
    if scheme == "strips" or geometry == "chain":
        chunks = np.split(site_order(geometry, L), 4)
        return Partition4(*(np.sort(ch) for ch in chunks))
    if scheme == "quadrants":
        if L % 2:
            raise ValueError("quadrants need even L")
        r, c = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        h = L // 2
        quad = (r >= h).astype(int) * 2 + (c >= h).astype(int)
        sites = r * L + c
        return Partition4(*(np.sort(sites[quad == k]) for k in (0, 1, 3, 2)))
    raise ValueError(f"unknown partition scheme {scheme!r}")


def half_region(geometry: str, L: int) -> np.ndarray:
    order = site_order(geometry, L)
    return np.sort(order[: order.size // 2])


# ---------------------------------------------------------------- ranks


class _Basis:
    """Incremental xor-basis over row bit-vectors (columns of the tableau)."""

    def __init__(self, state: CompressedState, max_vectors: int):
        self.state = state
        self.nw = state.nw
        self.basis = np.zeros((min(max_vectors, state.nrows) + 1, max(self.nw, 1)), dtype=np.uint64)
        self.pivmap = np.full(max(self.nw, 1) * 64, -1, dtype=np.int64)
        self.rank = 0

    def add(self, qubits: np.ndarray) -> "_Basis":
        if self.state.nrows:
            self.rank = int(K.rank_insert(self.state.xs, self.state.zs, qubits, self.nw,
                                          self.basis, self.pivmap, self.rank))
        return self

    def copy(self) -> "_Basis":
        new = object.__new__(_Basis)
        new.state, new.nw, new.rank = self.state, self.nw, self.rank
        new.basis = self.basis.copy()
        new.pivmap = self.pivmap.copy()
        return new


def region_rank(state: CompressedState, qubits) -> int:
    q = np.asarray(qubits, dtype=np.int64)
    return _Basis(state, 2 * q.size).add(q).rank


def conditional_i3(state: CompressedState, part: Partition4) -> int:
    """``I3 = S'(a)+S'(b)+S'(c)-S'(ab)-S'(ac)-S'(bc)+S'(abc)`` with
    ``S'(X) = S(X|A)``.

    Region sizes cancel, leaving
    ``r(bcd)+r(acd)+r(abd)-r(cd)-r(bd)-r(ad)+r(d)-r(abcd)`` where ``r`` is the
    rank restricted to the listed columns; the ranks share partial bases.
    """
    a, b, c, d = (np.asarray(x, dtype=np.int64) for x in part.regions())
    cap = 2 * state.n
    bd_ = _Basis(state, cap).add(d)
    r_d = bd_.rank
    ad = bd_.copy().add(a)
    abd = ad.copy().add(b)
    r_ad, r_abd = ad.rank, abd.rank
    r_all = abd.add(c).rank
    bd = bd_.copy().add(b)
    r_bd = bd.rank
    r_bcd = bd.add(c).rank
    cd = bd_.add(c)
    r_cd = cd.rank
    r_acd = cd.add(a).rank
    return r_bcd + r_acd + r_abd - r_cd - r_bd - r_ad + r_d - r_all


def bipartite_cee(state: CompressedState, region=None, geometry: str | None = None,
                  L: int | None = None) -> int:
    """``S(M|A)`` for the half-system region (or an explicit ``region``)."""
    if region is None:
        if geometry is None:
            if state.n % 2:
                raise ValueError("half cut needs an even number of sites")
            region = np.arange(state.n // 2)
        else:
            region = half_region(geometry, L)
    return state.cee(region)


def cee_full(state: CompressedState) -> int:
    """``S(S|A) = N - rank(V)``."""
    return state.n - state.rank()


def make_observables(names, geometry: str, L: int, scheme: str = "strips") -> dict:
    """Name -> callable(state) for the names in ``OBSERVABLE_NAMES``."""
    out: dict[str, Callable[[CompressedState], int]] = {}
    for name in names:
        if name == "i3":
            part = partition_four(geometry, L, scheme)
            out[name] = lambda st, part=part: conditional_i3(st, part)
        elif name == "cee_half":
            half = half_region(geometry, L)
            out[name] = lambda st, half=half: st.cee(half)
        elif name == "cee_full":
            out[name] = cee_full
        else:
            raise ValueError(f"unknown observable {name!r}; expected one of {OBSERVABLE_NAMES}")
    return out


def purification_curve(spec: CircuitSpec, trajectory_index: int = 0, grid_index: int = 0) -> np.ndarray:
    """``S(S|A)`` at every time step of a trajectory started maximally mixed."""
    if spec.initial != "maximally_mixed":
        raise ValueError("purification needs initial = maximally_mixed")
    rec = run_trajectory(replace(spec, record="all"), {"cee_full": cee_full},
                         trajectory_index, grid_index)
    return rec.values["cee_full"]
