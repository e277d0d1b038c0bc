"""The two-qubit Clifford group modulo phases (11520 elements).

Each element is stored by its conjugation action on the 16 two-qubit Pauli
patterns. A pattern index packs ``xa | za<<1 | xb<<2 | zb<<3`` and denotes the
Hermitian Pauli ``Pa (x) Pb`` with ``(x, z) = (1, 1)`` read as Y. Conjugation maps
pattern ``i`` to ``(-1)**sgn[i]`` times pattern ``out[i]``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GROUP_ORDER = 11520
ALL = np.uint64(0xFFFFFFFFFFFFFFFF)

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])


def pauli1(x: int, z: int) -> np.ndarray:
    return [[_I, _Z], [_X, _Y]][x][z]


def pauli_pattern(i: int) -> np.ndarray:
    """Dense 4x4 matrix of Pauli pattern ``i`` (qubit a is the first factor)."""
    return np.kron(pauli1(i & 1, (i >> 1) & 1), pauli1((i >> 2) & 1, (i >> 3) & 1))


def _cnot(control_first: bool) -> np.ndarray:
    u = np.zeros((4, 4), dtype=complex)
    for a in range(2):
        for b in range(2):
            if control_first:
                u[2 * a + (b ^ a), 2 * a + b] = 1
            else:
                u[2 * (a ^ b) + b, 2 * a + b] = 1
    return u


GENERATORS = {
    "H0": np.kron(_H, _I),
    "H1": np.kron(_I, _H),
    "S0": np.kron(_S, _I),
    "S1": np.kron(_I, _S),
    "CNOT01": _cnot(True),
    "CNOT10": _cnot(False),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_GEN_NAMES = tuple(GENERATORS)


def action_of_unitary(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(out, sgn) conjugation tables of a two-qubit Clifford unitary."""
    pats = [pauli_pattern(i) for i in range(16)]
    out = np.zeros(16, dtype=np.int64)
    sgn = np.zeros(16, dtype=np.int64)
    for i in range(16):
        img = u @ pats[i] @ u.conj().T
        for j in range(16):
            ov = np.trace(pats[j] @ img).real / 4
            if abs(abs(ov) - 1) < 1e-9:
                out[i] = j
                sgn[i] = 0 if ov > 0 else 1
                break
        else:
            raise ValueError("unitary is not Clifford")
    return out, sgn


@dataclass(frozen=True)
class CliffordTable:
    """All two-qubit Cliffords in BFS order from the identity.

    Attributes
    ----------
    out, sgn : ndarray, shape (11520, 16)
        Conjugation action per element.
    mats : ndarray of uint64, shape (11520, 4, 4)
        Linear map as word masks (0 or all-ones); column ``j`` is the image of
        unit pattern ``1 << j``.
    anfs : ndarray of uint64, shape (11520, 16)
        Algebraic normal form of the sign function as word masks.
    words : tuple of tuple of str
        Generator word (applied left to right) producing each element.
    """

    out: np.ndarray
    sgn: np.ndarray
    mats: np.ndarray
    anfs: np.ndarray
    words: tuple

    def __len__(self) -> int:
        return self.out.shape[0]

    def unitary(self, g: int) -> np.ndarray:
        u = np.eye(4, dtype=complex)
        for name in self.words[g]:
            u = GENERATORS[name] @ u
        return u


def anf(table: np.ndarray) -> np.ndarray:
    """Moebius transform of a 16-entry boolean table into ANF coefficients."""
    f = np.array(table, dtype=np.int64) & 1
    for j in range(4):
        step = 1 << j
        for m in range(16):
            if m & step:
                f[m] ^= f[m ^ step]
    return f


@lru_cache(maxsize=1)
def clifford_table() -> CliffordTable:
    gens = [action_of_unitary(GENERATORS[n]) for n in _GEN_NAMES]
    ident = (np.arange(16), np.zeros(16, dtype=np.int64))
    outs, sgns, words = [ident[0]], [ident[1]], [()]
    seen = {ident[0].tobytes() + ident[1].tobytes(): 0}
    queue = deque([0])
    while queue:
        k = queue.popleft()
        o1, s1 = outs[k], sgns[k]
        for name, (o2, s2) in zip(_GEN_NAMES, gens):
            o = o2[o1]
            s = s1 ^ s2[o1]
            key = o.tobytes() + s.tobytes()
            if key in seen:
                continue
            seen[key] = len(outs)
            outs.append(o)
            sgns.append(s)
            words.append(words[k] + (name,))
            queue.append(len(outs) - 1)
    out = np.array(outs)
    sgn = np.array(sgns)
    if out.shape[0] != GROUP_ORDER:
        raise RuntimeError(f"closure produced {out.shape[0]} elements")
    units = out[:, [1, 2, 4, 8]]  # (G, j) image of unit pattern j
    bits = (units[:, None, :] >> np.arange(4)[None, :, None]) & 1  # (G, i, j)
    mats = np.where(bits == 1, ALL, np.uint64(0)).astype(np.uint64)
    coeff = np.array([anf(row) for row in sgn])
    anfs = np.where(coeff == 1, ALL, np.uint64(0)).astype(np.uint64)
    return CliffordTable(out=out, sgn=sgn, mats=mats, anfs=anfs, words=tuple(words))


def sample(rng: np.random.Generator, size) -> np.ndarray:
    """Uniformly random element indices."""
    return rng.integers(GROUP_ORDER, size=size)
