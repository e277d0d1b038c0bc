"""Independent dense-matrix oracles used by the tests.

Qubit 0 is the most significant tensor factor throughout, matching the
two-qubit Clifford convention (qubit ``a`` first).
"""
from __future__ import annotations

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_all(ops):
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


def pauli_dense(s: str) -> np.ndarray:
    sign = -1.0 if s.startswith("-") else 1.0
    return sign * kron_all([PAULI[c] for c in s.lstrip("+-")])


def rho_from_rows(rows, n: int) -> np.ndarray:
    """``2**-n prod(I + g)`` for commuting independent signed Paulis."""
    d = 2 ** n
    rho = np.eye(d, dtype=complex)
    for s in rows:
        rho = rho @ (np.eye(d) + pauli_dense(s))
    return rho / d


def embed(op: np.ndarray, qubits, n: int) -> np.ndarray:
    """Embed a ``2**k`` operator on ``qubits`` (in that order) into n qubits."""
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    perm = list(qubits) + rest
    full = np.kron(op, np.eye(2 ** (n - k)))
    full = full.reshape([2] * (2 * n))
    inv = np.argsort(perm)
    full = full.transpose(list(inv) + [n + i for i in inv])
    return full.reshape(2 ** n, 2 ** n)


def apply_local(rho: np.ndarray, op: np.ndarray, qubits, n: int) -> np.ndarray:
    """``op rho op^dagger`` for a ``2**k`` operator on ``qubits``, by tensor
    contraction instead of embedding into the full space."""
    qubits = list(qubits)
    k = len(qubits)
    t = rho.reshape([2] * (2 * n))
    o = op.reshape([2] * (2 * k))
    t = np.tensordot(o, t, axes=(list(range(k, 2 * k)), qubits))
    t = np.moveaxis(t, list(range(k)), qubits)
    cols = [n + q for q in qubits]
    t = np.tensordot(t, o.conj(), axes=(cols, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), cols)
    return t.reshape(2 ** n, 2 ** n)


def partial_trace(rho: np.ndarray, keep, n: int) -> np.ndarray:
    keep = sorted(keep)
    t = rho.reshape([2] * (2 * n))
    drop = [q for q in range(n) if q not in keep]
    # trace pairs from the highest index down so positions stay valid
    cur = n
    for q in sorted(drop, reverse=True):
        t = np.trace(t, axis1=q, axis2=q + cur)
        cur -= 1
    k = len(keep)
    return t.reshape(2 ** k, 2 ** k)


def entropy_bits(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-12]
    return float(-(w * np.log2(w)).sum())


def region_entropy(rho: np.ndarray, region, n: int) -> float:
    if len(region) == 0:
        return 0.0
    return entropy_bits(partial_trace(rho, region, n))


def project_z(rho: np.ndarray, q: int, outcome: int, n: int) -> tuple[np.ndarray, float]:
    proj = np.diag([1.0 - outcome, float(outcome)]).astype(complex)
    new = apply_local(rho, proj, [q], n)
    prob = float(np.trace(new).real)
    return (new / prob if prob > 1e-12 else new), prob


def measure_any(rho: np.ndarray, q: int, n: int, rng) -> np.ndarray:
    """Project onto an outcome with nonzero probability (chosen at random)."""
    outs = [0, 1]
    rng.shuffle(outs)
    for o in outs:
        new, prob = project_z(rho, q, o, n)
        if prob > 1e-9:
            return new
    raise RuntimeError("no outcome with nonzero probability")


# ---------------------------------------------------------------- channels


def dephase(rho, q, n):
    return 0.5 * (rho + apply_local(rho, Z, [q], n))


def reset(rho, q, n):
    rest = [k for k in range(n) if k != q]
    red = partial_trace(rho, rest, n)
    zero = np.diag([1.0, 0.0]).astype(complex)
    return _insert_factor(red, zero, q, n)


def depolarize(rho, q, n):
    rest = [k for k in range(n) if k != q]
    red = partial_trace(rho, rest, n)
    return _insert_factor(red, I2 / 2, q, n)


def _insert_factor(red, single, q, n):
    full = np.kron(single, red)
    perm = [q] + [k for k in range(n) if k != q]
    inv = np.argsort(perm)
    t = full.reshape([2] * (2 * n)).transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2 ** n, 2 ** n)


CHANNELS = {"dephasing": dephase, "resetting": reset, "depolarizing": depolarize}


def dilate(rho, q, n, kind):
    """Apply the channel unitarily with fresh environment qubits appended at the
    end. Returns ``(rho', n')``; tracing the new qubits gives the channel."""
    if kind == "depolarizing":
        bell = np.zeros(4, dtype=complex)
        bell[0] = bell[3] = 1 / np.sqrt(2)
        rho = np.kron(rho, np.outer(bell, bell.conj()))
        n2 = n + 2
        sw = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
        return apply_local(rho, sw, [q, n], n2), n2
    else:
        rho = np.kron(rho, np.diag([1.0, 0.0]).astype(complex))
        n2 = n + 1
        if kind == "dephasing":
            cx = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
            return apply_local(rho, cx, [q, n], n2), n2
        sw = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
        return apply_local(rho, sw, [q, n], n2), n2


# ---------------------------------------------------------------- random circuits


KINDS = ("dephasing", "resetting", "depolarizing")


def random_program(rng, n, n_events=10, ancilla_budget=None, gate_prob=0.6):
    """Random interleaving of two-qubit Cliffords with measurement, noise and
    QE events. Each event is a tuple; QE events stop once the ancilla budget
    would be exceeded."""
    prog = []
    used = 0
    events = 0
    while events < n_events:
        if n >= 2 and rng.random() < gate_prob:
            a, b = rng.choice(n, 2, replace=False)
            prog.append(("gate", int(a), int(b), int(rng.integers(11520))))
            continue
        r = rng.random()
        site = int(rng.integers(n))
        kind = KINDS[int(rng.integers(3))]
        if r < 1 / 3:
            prog.append(("measure", site))
        elif r < 2 / 3:
            prog.append(("noise", site, kind))
        else:
            need = 2 if kind == "depolarizing" else 1
            if ancilla_budget is not None and used + need > ancilla_budget:
                prog.append(("measure", site))
            else:
                prog.append(("qe", site, kind))
                used += need
        events += 1
    return prog


def ancillas_needed(prog):
    return sum(2 if e[2] == "depolarizing" else 1 for e in prog if e[0] == "qe")


def envs_needed(prog):
    return sum(2 if e[2] == "depolarizing" else 1 for e in prog if e[0] == "noise")


def run_dense(prog, n, initial, rng):
    """Dense density matrix of system + retained ancillas (appended in event
    order after the system). Returns ``(rho, n_total)``."""
    from qe_mipt.clifford2 import clifford_table

    tab = clifford_table()
    d = 2 ** n
    if initial == "pure_zero":
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1
    else:
        rho = np.eye(d, dtype=complex) / d
    nt = n
    for ev in prog:
        if ev[0] == "gate":
            _, a, b, g = ev
            rho = apply_local(rho, tab.unitary(g), [a, b], nt)
        elif ev[0] == "measure":
            rho = measure_any(rho, ev[1], nt, rng)
        elif ev[0] == "noise":
            rho = CHANNELS[ev[2]](rho, ev[1], nt)
        else:
            rho, nt = dilate(rho, ev[1], nt, ev[2])
    return rho, nt


def run_explicit(prog, n, initial, rng):
    """Exact stabilizer simulation keeping ancillas and environments as qubits.

    Column layout: system ``[0, n)``, then one block of fresh qubits per event
    in program order. Returns ``(state, ancilla_columns)``.
    """
    from qe_mipt.stab_core import StabilizerState

    total = n + ancillas_needed(prog) + envs_needed(prog)
    st = StabilizerState(total, capacity=2 * total + 4)
    for q in range(n, total):
        z = np.zeros(total, dtype=np.uint8)
        z[q] = 1
        st.append_row(np.zeros(total, dtype=np.uint8), z)
    if initial == "pure_zero":
        for q in range(n):
            z = np.zeros(total, dtype=np.uint8)
            z[q] = 1
            st.append_row(np.zeros(total, dtype=np.uint8), z)
    nxt = n
    ancillas = []
    for ev in prog:
        if ev[0] == "gate":
            _, a, b, g = ev
            st.apply_layer([a], [b], [g])
        elif ev[0] == "measure":
            st.measure_z(ev[1], rng)
        else:
            site, kind = ev[1], ev[2]
            if kind == "depolarizing":
                fresh = [nxt, nxt + 1]
                st.h(fresh[0])
                st.cnot(fresh[0], fresh[1])
                st.swap(site, fresh[0])
            elif kind == "dephasing":
                fresh = [nxt]
                st.cnot(site, fresh[0])
            else:
                fresh = [nxt]
                st.swap(site, fresh[0])
            nxt += len(fresh)
            if ev[0] == "noise":
                st = st.trace_out(fresh)
            else:
                ancillas.extend(fresh)
    return st, ancillas


def run_compressed(prog, n, initial, rng, state_cls=None, **kw):
    from qe_mipt.channels import CompressedState

    cls = state_cls or CompressedState
    cs = cls.initial(n, initial, **kw)
    for ev in prog:
        if ev[0] == "gate":
            _, a, b, g = ev
            cs.apply_layer([a], [b], [g])
        elif ev[0] == "measure":
            cs.measure(ev[1], int(rng.integers(2)))
        elif ev[0] == "noise":
            cs.apply_noise(ev[1], ev[2])
        else:
            cs.apply_qe(ev[1], ev[2])
    return cs


def contiguous_regions(n):
    return [list(range(i, j)) for i in range(n) for j in range(i + 1, n + 1)]


# ---------------------------------------------------------------- exhaustive stabilizer inputs


def isotropic_subspaces(n: int) -> list[list[int]]:
    """Every isotropic subspace of the n-qubit Pauli group modulo phases, as a
    basis of bit vectors ``x | z << n``. Built dimension by dimension; each
    subspace is keyed by its full element set, so none is repeated."""
    mask = (1 << n) - 1

    def commute(a, b):
        return bin(((a & mask) & (b >> n)) ^ ((b & mask) & (a >> n))).count("1") % 2 == 0

    level = {frozenset([0]): []}
    out = [[]]
    for _ in range(n):
        nxt = {}
        for elems, basis in level.items():
            for v in range(1, 1 << (2 * n)):
                if v in elems or not all(commute(v, b) for b in basis):
                    continue
                new = elems | {e ^ v for e in elems}
                if new not in nxt:
                    nxt[new] = basis + [v]
        out.extend(nxt.values())
        level = nxt
    return out


def all_signed_generators(n: int):
    """Yield generator strings (with signs) of every stabilizer state, pure or
    mixed, on ``n`` qubits."""
    import itertools

    for basis in isotropic_subspaces(n):
        body = ["".join("IXZY"[((v >> q) & 1) | (((v >> (n + q)) & 1) << 1)] for q in range(n))
                for v in basis]
        for signs in itertools.product("+-", repeat=len(basis)):
            yield [s + b for s, b in zip(signs, body)]


class DenseStabilizerOracle:
    """Cached dense density matrices of stabilizer groups and the Kraus-form
    superoperators of the three single-qubit channels, for fixed ``n``."""

    def __init__(self, n: int):
        self.n = n
        self.d = 2 ** n
        self._pauli = {}
        self._rho = {}
        eye = np.eye(self.d, dtype=complex)
        self.eye = eye
        self.superops = {}
        for site in range(n):
            def emb(c):
                return self.pauli("+" + "".join(c if q == site else "I" for q in range(n)))
            kraus = {
                "dephasing": [np.sqrt(0.5) * emb("I"), np.sqrt(0.5) * emb("Z")],
                "depolarizing": [0.5 * emb(c) for c in "IXYZ"],
                "resetting": [(emb("I") + emb("Z")) / 2, emb("X") @ (emb("I") - emb("Z")) / 2],
            }
            for kind, ks in kraus.items():
                # row-major vec(K rho K^+) = (K kron conj K) vec(rho)
                self.superops[(site, kind)] = sum(np.kron(k, k.conj()) for k in ks)

    def pauli(self, s: str) -> np.ndarray:
        m = self._pauli.get(s)
        if m is None:
            m = self._pauli[s] = pauli_dense(s)
        return m

    def rho(self, rows) -> np.ndarray:
        key = tuple(rows)
        r = self._rho.get(key)
        if r is None:
            r = self.eye / self.d
            for s in rows:
                r = r @ (self.eye + self.pauli(s))
            self._rho[key] = r
        return r

    def channel(self, rho: np.ndarray, site: int, kind: str) -> np.ndarray:
        return (self.superops[(site, kind)] @ rho.ravel()).reshape(self.d, self.d)
