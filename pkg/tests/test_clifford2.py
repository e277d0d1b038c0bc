import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import pauli_dense
from qe_mipt.clifford2 import (GENERATORS, GROUP_ORDER, action_of_unitary, clifford_table,
                               pauli_pattern, sample)

PAULIS = {s: pauli_dense(s) for s in (a + b for a in "IXYZ" for b in "IXYZ")}


def as_signed_pauli(m):
    for s, p in PAULIS.items():
        for sign in (1, -1):
            if np.allclose(m, sign * p):
                return s, sign
    return None


def test_group_order():
    tab = clifford_table()
    assert len(tab) == GROUP_ORDER == 11520
    keys = {(tuple(tab.out[g].ravel()), tuple(tab.sgn[g].ravel())) for g in range(GROUP_ORDER)}
    assert len(keys) == GROUP_ORDER


def test_generators_are_in_table():
    tab = clifford_table()
    acts = {(tuple(tab.out[g].ravel()), tuple(tab.sgn[g].ravel())) for g in range(GROUP_ORDER)}
    for u in GENERATORS.values():
        out, sgn = action_of_unitary(u)
        assert (tuple(out.ravel()), tuple(sgn.ravel())) in acts


def test_elements_map_paulis_to_paulis():
    tab = clifford_table()
    rng = np.random.default_rng(0)
    for g in rng.integers(GROUP_ORDER, size=300):
        u = tab.unitary(int(g))
        assert np.allclose(u @ u.conj().T, np.eye(4))
        for s in ("XI", "ZI", "IX", "IZ"):
            img = as_signed_pauli(u @ PAULIS[s] @ u.conj().T)
            assert img is not None and img[0] != "II"


def test_table_action_matches_unitary():
    tab = clifford_table()
    rng = np.random.default_rng(1)
    for g in rng.integers(GROUP_ORDER, size=200):
        out, sgn = action_of_unitary(tab.unitary(int(g)))
        assert np.array_equal(out, tab.out[g]) and np.array_equal(sgn, tab.sgn[g])


def test_pauli_pattern_convention():
    assert np.allclose(pauli_pattern(0), np.eye(4))
    assert np.allclose(pauli_pattern(1), PAULIS["XI"])
    assert np.allclose(pauli_pattern(3), PAULIS["YI"])
    assert np.allclose(pauli_pattern(8), PAULIS["IZ"])


def test_sampling_uniform_chi2():
    rng = np.random.default_rng(20240)
    counts = np.bincount(sample(rng, 10_000_000), minlength=GROUP_ORDER)
    assert counts.size == GROUP_ORDER
    assert chisquare(counts).pvalue > 0.01


@pytest.mark.parametrize("size", [1, 7])
def test_sample_range(size):
    out = sample(np.random.default_rng(2), size)
    assert out.shape == (size,) and (0 <= out).all() and (out < GROUP_ORDER).all()
