import functools

import numpy as np
import pytest

from oracles import (CHANNELS, KINDS, contiguous_regions, random_program, rho_from_rows,
                     run_compressed, run_explicit)
from qe_mipt.channels import (ChannelKind, CompressedState, apply_noise_at, apply_qe_at, cee,
                              cee_by_elimination, normalize_rows)
from qe_mipt.clifford2 import GROUP_ORDER
from qe_mipt.stab_core import StabilizerState


def _key(st: StabilizerState):
    return tuple(st.canonical().to_strings())


@functools.lru_cache(maxsize=None)
def all_stabilizer_states(n: int) -> tuple:
    """Every stabilizer group (pure or mixed, with signs) on ``n`` qubits, by
    closure of ``|0...0>`` under H, S, CNOT and single-qubit trace."""
    start = StabilizerState.zero(n)
    seen = {_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for st in frontier:
            moves = []
            for q in range(n):
                for op in ("h", "s"):
                    c = st.copy()
                    getattr(c, op)(q)
                    moves.append(c)
                moves.append(st.trace_out([q]))
                for t in range(n):
                    if t != q:
                        c = st.copy()
                        c.cnot(q, t)
                        moves.append(c)
            for c in moves:
                k = _key(c)
                if k not in seen:
                    seen[k] = c
                    nxt.append(c)
        frontier = nxt
    return tuple(seen.values())


def random_stabilizer_state(rng, n):
    st = StabilizerState.zero(n)
    for _ in range(3 * n):
        a, b = rng.choice(n, 2, replace=False)
        st.apply_layer(np.array([a]), np.array([b]), np.array([rng.integers(GROUP_ORDER)]))
    for q in range(n):
        if rng.random() < 0.3:
            st = st.trace_out([q])
    return st


def test_enumeration_counts():
    # pure stabilizer state counts 6, 60, 1080 are a check that the key is canonical
    for n, pure in ((1, 6), (2, 60), (3, 1080)):
        states = all_stabilizer_states(n)
        assert sum(1 for s in states if s.nrows == n) == pure


def _check_channel(st: StabilizerState, kind: str):
    n = st.n
    rho = rho_from_rows(st.to_strings(), n)
    for site in range(n):
        cs = CompressedState.from_state(st, track=True)
        cs.apply_noise(site, kind)
        cs.normalize_rows()
        got = rho_from_rows(cs.to_strings(), n)
        assert np.abs(got - CHANNELS[kind](rho, site, n)).max() < 1e-12


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_channel_equivalence_exhaustive(kind, n):
    for st in all_stabilizer_states(n):
        _check_channel(st, kind)


@pytest.mark.parametrize("kind", KINDS)
def test_channel_equivalence_random_four_qubits(kind):
    rng = np.random.default_rng(44)
    for _ in range(300):
        _check_channel(random_stabilizer_state(rng, 4), kind)


# ---------------------------------------------------------------- kinds


def test_channel_kind():
    k = ChannelKind("depolarizing", "qe")
    assert k.code == 2 and k.fresh_qubits == 2
    assert ChannelKind("dephasing", "noise").fresh_qubits == 1
    with pytest.raises(ValueError):
        ChannelKind("amplitude_damping", "noise")
    with pytest.raises(ValueError):
        ChannelKind("dephasing", "bath")


# ---------------------------------------------------------------- noise examples


def plus_state(n=1):
    st = StabilizerState.from_strings(["X" * 1])
    return CompressedState.from_state(st, track=True)


def test_noise_examples():
    cs = apply_noise_at(plus_state(), 0, "dephasing")
    assert cs.cee([0]) == 1
    for start in ("X", "Y", "-Z", "Z"):
        cs = CompressedState.from_state(StabilizerState.from_strings([start]), track=True)
        apply_noise_at(cs, 0, "resetting")
        normalize_rows(cs)
        assert cs.to_strings() == ["+Z"] and cs.cee([0]) == 0
    cs = CompressedState.initial(1, track=True)
    apply_noise_at(cs, 0, "depolarizing")
    assert cs.cee([0]) == 1


def test_resetting_idempotent():
    rng = np.random.default_rng(9)
    for _ in range(100):
        st = random_stabilizer_state(rng, 4)
        site = int(rng.integers(4))
        once = CompressedState.from_state(st, track=True)
        once.apply_noise(site, "resetting")
        twice = CompressedState.from_state(st, track=True)
        twice.apply_noise(site, "resetting")
        twice.apply_noise(site, "resetting")
        assert np.allclose(rho_from_rows(once.to_strings(), 4), rho_from_rows(twice.to_strings(), 4))


# ---------------------------------------------------------------- QE examples


def test_qe_dephasing_on_zero():
    cs = CompressedState.initial(1)
    cs.apply_qe(0, "dephasing")
    # the ancilla-only row shows up as a duplicate Z_s, absorbed on normalization
    cs.normalize_rows()
    assert cs.x == 1 and cs.to_strings()[0].lstrip("+-") == "Z" and cs.nrows == 1
    assert cee(cs, [0]) == 0
    assert cs.ancilla_entropy() == 0


def test_qe_dephasing_on_plus():
    cs = plus_state()
    cs = apply_qe_at(cs, 0, "dephasing")
    assert cs.x == 0
    assert sorted(s.lstrip("+-") for s in cs.to_strings()) == ["X", "Z"]
    assert cee(cs, [0]) == -1
    assert cs.ancilla_entropy() == 1
    # the stored rows exceed the system size: the bound is 2n, not n
    cs.normalize_rows()
    assert cs.nrows == 2 > cs.n


def test_normalize_examples():
    cs = CompressedState.initial(2)
    cs.append_row([0, 0], [0, 0])
    cs.x = 3
    assert normalize_rows(cs).x == 4 and cs.nrows == 2
    before = cs.to_strings()
    assert cs.normalize_rows() == 0 and cs.to_strings() == before and cs.x == 4


def test_normalize_fuzz():
    rng = np.random.default_rng(2)
    for _ in range(300):
        n = int(rng.integers(1, 7))
        cs = CompressedState(n)
        rows = []
        for _ in range(int(rng.integers(0, 3 * n))):
            if rows and rng.random() < 0.4:
                # adversarial: xor of earlier rows, or a zero row
                pick = [r for r in rows if rng.random() < 0.5]
                x = np.bitwise_xor.reduce([r[0] for r in pick], initial=0) if pick else np.zeros(n, int)
                z = np.bitwise_xor.reduce([r[1] for r in pick], initial=0) if pick else np.zeros(n, int)
                x = np.broadcast_to(x, n)
                z = np.broadcast_to(z, n)
            else:
                x, z = rng.integers(0, 2, n), rng.integers(0, 2, n)
            rows.append((np.asarray(x), np.asarray(z)))
            cs.append_row(x, z)
        rank = cs.rank()
        total = cs.nrows
        cee_before = [cs.cee(m) for m in contiguous_regions(n)]
        removed = cs.normalize_rows()
        assert cs.nrows == rank and removed == total - rank and cs.x == removed
        x, z, _ = cs.row_bits()
        assert all(x[r].any() or z[r].any() for r in range(cs.nrows))
        assert [cs.cee(m) for m in contiguous_regions(n)] == cee_before


# ---------------------------------------------------------------- CEE


def test_cee_against_explicit_ancillas_large():
    rng = np.random.default_rng(17)
    for trial in range(100):
        n = int(rng.integers(2, 9))
        init = ("pure_zero", "maximally_mixed")[trial % 2]
        prog = random_program(rng, n, n_events=12)
        cs = run_compressed(prog, n, init, rng)
        st, anc = run_explicit(prog, n, init, rng)
        sa = st.entropy(anc)
        for mask in range(1, 2 ** n):
            m = [q for q in range(n) if mask >> q & 1]
            assert cs.cee(m) == st.entropy(m + anc) - sa
        assert cs.cee(m) == cee_by_elimination(cs, m)


def test_cee_by_elimination_agrees():
    rng = np.random.default_rng(23)
    for _ in range(150):
        n = int(rng.integers(1, 7))
        cs = run_compressed(random_program(rng, n, n_events=10), n, "pure_zero", rng)
        for m in contiguous_regions(n):
            assert cee_by_elimination(cs, m) == cs.cee(m)


def test_row_bound_and_x_monotone():
    rng = np.random.default_rng(31)
    for _ in range(100):
        n = int(rng.integers(1, 9))
        cs = CompressedState.initial(n, compact_at=10 ** 6, capacity=16 * n + 64)
        last_x = 0
        for ev in random_program(rng, n, n_events=40):
            if ev[0] == "gate":
                cs.apply_layer([ev[1]], [ev[2]], [ev[3]])
            elif ev[0] == "measure":
                cs.measure(ev[1], int(rng.integers(2)))
            elif ev[0] == "noise":
                cs.apply_noise(ev[1], ev[2])
            else:
                cs.apply_qe(ev[1], ev[2])
            assert cs.x >= last_x
            last_x = cs.x
            c = cs.copy()
            c.x = cs.x
            c.normalize_rows()
            assert c.nrows <= 2 * n


def test_compaction_threshold_does_not_change_cee():
    rng = np.random.default_rng(37)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        prog = random_program(rng, n, n_events=30)
        seed = int(rng.integers(1 << 30))
        tight = run_compressed(prog, n, "pure_zero", np.random.default_rng(seed),
                               compact_at=2 * n + 2)
        loose = run_compressed(prog, n, "pure_zero", np.random.default_rng(seed),
                               capacity=20 * n + 64, compact_at=10 ** 6)
        for m in contiguous_regions(n):
            assert tight.cee(m) == loose.cee(m)
