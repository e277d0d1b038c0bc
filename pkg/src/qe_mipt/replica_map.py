"""Permutation calculus for the replica statistical-mechanics picture.

Permutations of ``Q`` replicas are image tuples; ``(s * t)(i) = s(t(i))``.
Inner products between permutation states are ``<s|t> = d**cycles(s t^-1)``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Iterable

import numpy as np


@dataclass(frozen=True)
class Permutation:
    """Bijection on ``{0..Q-1}`` stored as its image tuple."""

    image: tuple

    def __post_init__(self):
        img = tuple(int(i) for i in self.image)
        if sorted(img) != list(range(len(img))):
            raise ValueError(f"{img} is not a permutation")
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, Q: int) -> "Permutation":
        return cls(tuple(range(Q)))

    @classmethod
    def from_cycles(cls, Q: int, cycles: Iterable[Iterable[int]]) -> "Permutation":
        img = list(range(Q))
        for cyc in cycles:
            cyc = list(cyc)
            for i, a in enumerate(cyc):
                img[a] = cyc[(i + 1) % len(cyc)]
        return cls(tuple(img))

    @property
    def Q(self) -> int:
        return len(self.image)

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.Q != other.Q:
            raise ValueError("permutations act on different replica counts")
        return Permutation(tuple(self.image[i] for i in other.image))

    def inverse(self) -> "Permutation":
        inv = [0] * self.Q
        for i, a in enumerate(self.image):
            inv[a] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple]:
        seen = [False] * self.Q
        out = []
        for s in range(self.Q):
            if seen[s]:
                continue
            cyc = []
            i = s
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.image[i]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> tuple:
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))

    def orbit_partition(self) -> frozenset:
        return frozenset(frozenset(c) for c in self.cycles())

    def __repr__(self) -> str:
        cyc = [c for c in self.cycles() if len(c) > 1]
        return "Permutation(" + ("".join(str(c) for c in cyc) if cyc else "e") + f", Q={self.Q})"


def all_permutations(Q: int) -> list[Permutation]:
    return [Permutation(p) for p in itertools.permutations(range(Q))]


def cycle_count(g: Permutation) -> int:
    return len(g.cycles())


def inner(sigma: Permutation, tau: Permutation, d: int) -> int:
    """``<sigma|tau> = d**cycles(sigma tau^-1)``."""
    return d ** cycle_count(sigma * tau.inverse())


def catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def moebius(g: Permutation) -> int:
    """Product over cycles of length ``l`` of ``(-1)**(l-1) Catalan(l-1)``."""
    out = 1
    for c in g.cycles():
        l = len(c)
        out *= (-1) ** (l - 1) * catalan(l - 1)
    return out


def weingarten_leading(g: Permutation, d: int, Q: int | None = None) -> Fraction:
    """Leading large-d Weingarten weight ``Moeb(g) / d**(4Q - 2|g|)``."""
    Q = g.Q if Q is None else Q
    if Q != g.Q:
        raise ValueError("Q does not match the permutation size")
    if d < 2:
        raise ValueError("d must be at least 2")
    return Fraction(moebius(g), d ** (4 * Q - 2 * cycle_count(g)))


@dataclass(frozen=True)
class ReplicaParams:
    """Replica count, local dimension and the two boundary permutations.

    ``cyclic`` defaults to the block-cyclic element for ``Q = n k + 1``: ``k``
    disjoint ``n``-cycles on the first ``n k`` replicas, identity on the last.
    """

    Q: int
    d: int = 2
    cyclic: Permutation | None = None

    def __post_init__(self):
        if self.Q < 1:
            raise ValueError("Q must be at least 1")
        if self.d < 2:
            raise ValueError("d must be at least 2")
        if self.cyclic is None:
            raise ValueError("pass cyclic explicitly or use ReplicaParams.from_nk")
        if self.cyclic.Q != self.Q:
            raise ValueError("cyclic element has the wrong size")

    @classmethod
    def from_nk(cls, n: int, k: int, d: int = 2) -> "ReplicaParams":
        Q = n * k + 1
        cyc = Permutation.from_cycles(Q, [range(b * n, (b + 1) * n) for b in range(k)])
        return cls(Q, d, cyc)

    @property
    def identity(self) -> Permutation:
        return Permutation.identity(self.Q)


BOND_KINDS = ("reset", "depolarizing", "dephasing_asymptotic")


def bond_weight(sigma: Permutation, tau: Permutation, params: ReplicaParams, p: float, q: float,
                kind: str, q_n: float | None = None, q_e: float | None = None) -> float:
    """Non-vertical bond weight between neighbouring permutations.

    ``q_n`` / ``q_e`` weight the identity-field and cyclic-field terms
    separately (both default to ``q / 2``, the zero-field case).
    """
    if sigma.Q != params.Q or tau.Q != params.Q:
        raise ValueError("permutations do not match params.Q")
    d = params.d
    C, E = params.cyclic, params.identity
    wn = q / 2 if q_n is None else q_n
    we = q / 2 if q_e is None else q_e
    st = inner(sigma, tau, d)
    if kind == "reset":
        return ((1 - p) * (1 - q) * st + (1 - p) * (we * inner(sigma, C, d) + wn * inner(sigma, E, d))
                + p * d)
    if kind == "depolarizing":
        return ((1 - p) * (1 - q) * st
                + (1 - p) * (we * inner(sigma, C, d) * inner(C, tau, d)
                             + wn * inner(sigma, E, d) * inner(E, tau, d))
                + d * p * (wn * inner(sigma, E, d) + we * inner(sigma, C, d))
                + p * (1 - q) * d)
    if kind == "dephasing_asymptotic":
        diag = 1.0 if sigma == tau else 0.0
        return ((1 - p) * (1 - q) * st
                + (1 - p) * (we * inner(sigma, C, d) + wn * inner(sigma, E, d)) * diag + p * d)
    raise ValueError(f"unknown bond kind {kind!r}; expected one of {BOND_KINDS}")


def dephasing_exact_inner(sigma: Permutation, tau: Permutation, params: ReplicaParams,
                          which: str = "N", max_states: int = 1 << 20) -> int:
    """Count index assignments ``i in [d]**Q`` with ``i_l = i_{s(l)}`` and
    ``i_l = i_{t(l)}`` for all ``l``, where ``(s, t) = (sigma, tau)`` for ``N``
    and ``(sigma C^-1, tau C^-1)`` for ``Q_op``."""
    d, Q = params.d, params.Q
    if d ** Q > max_states:
        raise ValueError(f"d**Q = {d ** Q} assignments is too many to enumerate; reduce Q or d")
    if which == "N":
        s, t = sigma, tau
    elif which == "Q_op":
        ci = params.cyclic.inverse()
        s, t = sigma * ci, tau * ci
    else:
        raise ValueError("which must be 'N' or 'Q_op'")
    idx = np.array(list(itertools.product(range(d), repeat=Q)), dtype=np.int64)
    ok = np.all(idx == idx[:, list(s.image)], axis=1) & np.all(idx == idx[:, list(t.image)], axis=1)
    return int(ok.sum())


def centralizer(c: Permutation) -> list[Permutation]:
    return [g for g in all_permutations(c.Q) if g * c == c * g]


@dataclass
class SymmetryReport:
    """Per symmetry family: number of (g, sigma, tau) cases checked and the
    violating cases found (first few kept)."""

    kind: str
    Q: int
    checked: dict
    violations: dict

    def passed(self, family: str) -> bool:
        return not self.violations[family]

    def to_record(self) -> dict:
        return {"kind": self.kind, "Q": self.Q,
                "families": {f: {"checked": self.checked[f], "violations": len(self.violations[f]),
                                 "pass": self.passed(f)} for f in self.checked}}

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'family':<14}{'checked':>10}{'violations':>12}  result"]
        for f in self.checked:
            lines.append(f"{f:<14}{self.checked[f]:>10}{len(self.violations[f]):>12}  "
                         f"{'pass' if self.passed(f) else 'FAIL'}")
        return "\n".join(lines)


def symmetry_check(params: ReplicaParams, kind: str, p: float, q_n: float, q_e: float,
                   tol: float = 1e-12, keep: int = 5) -> SymmetryReport:
    """Check bond-weight invariance under (1) simultaneous conjugation by the
    centralizer of the cyclic element, (2) inversion of both arguments and
    (3) ``s -> s^-1 C`` on both arguments."""
    if params.Q > 5:
        raise ValueError("exhaustive symmetry check is limited to Q <= 5")
    q = q_n + q_e
    perms = all_permutations(params.Q)
    C = params.cyclic

    def W(s, t):
        return bond_weight(s, t, params, p, q, kind, q_n=q_n, q_e=q_e)

    w0 = {(s, t): W(s, t) for s in perms for t in perms}
    fams: dict[str, Callable] = {
        "centralizer": None,
        "inversion": lambda s: s.inverse(),
        "field_swap": lambda s: s.inverse() * C,
    }
    checked = {f: 0 for f in fams}
    viol: dict[str, list] = {f: [] for f in fams}
    cent = centralizer(C)
    for (s, t), w in w0.items():
        for g in cent:
            gi = g.inverse()
            w2 = W(g * s * gi, g * t * gi)
            checked["centralizer"] += 1
            if abs(w2 - w) > tol * max(1.0, abs(w)) and len(viol["centralizer"]) < keep:
                viol["centralizer"].append((g, s, t))
            elif abs(w2 - w) > tol * max(1.0, abs(w)):
                viol["centralizer"].append(None)
        for fam in ("inversion", "field_swap"):
            m = fams[fam]
            w2 = W(m(s), m(t))
            checked[fam] += 1
            if abs(w2 - w) > tol * max(1.0, abs(w)):
                viol[fam].append((s, t) if len(viol[fam]) < keep else None)
    return SymmetryReport(kind, params.Q, checked, viol)
