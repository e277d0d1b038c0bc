import numpy as np
import pytest

from oracles import region_entropy
from qe_mipt.channels import CompressedState
from qe_mipt.circuit_engine import ChannelRate, CircuitSpec, run_trajectory
from qe_mipt.clifford2 import GROUP_ORDER
from qe_mipt.observables import (Partition4, bipartite_cee, cee_full, conditional_i3,
                                 half_region, make_observables, partition_four,
                                 purification_curve, region_rank)
from qe_mipt.stab_core import StabilizerState


def i3_by_terms(state, part: Partition4) -> int:
    a, b, c, _ = (list(r) for r in part.regions())
    S = state.cee
    return S(a) + S(b) + S(c) - S(a + b) - S(a + c) - S(b + c) + S(a + b + c)


def ensemble(spec, names, n_traj):
    obs = make_observables(names, spec.geometry, spec.L)
    recs = [run_trajectory(spec, obs, t) for t in range(n_traj)]
    return {k: np.array([r.values[k] for r in recs]) for k in names}


# ---------------------------------------------------------------- partitions


def test_partition_examples():
    part = partition_four("chain", 8)
    assert [r.tolist() for r in part.regions()] == [[0, 1], [2, 3], [4, 5], [6, 7]]
    L = 8
    for k, region in enumerate(partition_four("square", L).regions()):
        cols = region % L
        assert sorted(set(cols.tolist())) == [2 * k, 2 * k + 1]
        assert region.size == 2 * L


@pytest.mark.parametrize("L", range(2, 21, 2))
def test_partition_cover_disjoint_equal(L):
    geoms = [("square", "strips"), ("square", "quadrants")]
    if L % 4 == 0:
        geoms.append(("chain", "strips"))
    for geometry, scheme in geoms:
        n = L if geometry == "chain" else L * L
        regions = partition_four(geometry, L, scheme).regions()
        allsites = np.concatenate(regions)
        assert sorted(allsites.tolist()) == list(range(n))
        assert {r.size for r in regions} == {n // 4}


def test_partition_errors():
    with pytest.raises(ValueError):
        partition_four("chain", 6)
    with pytest.raises(ValueError):
        partition_four("square", 4, "rings")


def test_half_region():
    assert half_region("chain", 8).tolist() == [0, 1, 2, 3]
    h = half_region("square", 4)
    assert sorted(set((h % 4).tolist())) == [0, 1] and h.size == 8


# ---------------------------------------------------------------- I3


def test_i3_of_product_state_is_zero():
    cs = CompressedState.initial(8)
    assert conditional_i3(cs, partition_four("chain", 8)) == 0


def test_ghz_i3_matches_dense():
    ghz = StabilizerState.from_strings(["XXXX", "ZZII", "IZZI", "IIZZ"])
    part = partition_four("chain", 4)
    psi = np.zeros(16)
    psi[0] = psi[15] = 1 / np.sqrt(2)
    rho = np.outer(psi, psi)
    a, b, c = [0], [1], [2]
    S = lambda r: region_entropy(rho, r, 4)
    dense = S(a) + S(b) + S(c) - S(a + b) - S(a + c) - S(b + c) + S(a + b + c)
    cs = CompressedState.from_state(ghz)
    assert conditional_i3(cs, part) == round(dense) == 1


def test_i3_without_ancillas_is_ordinary_i3():
    rng = np.random.default_rng(6)
    part = partition_four("chain", 8)
    for _ in range(30):
        st = StabilizerState.zero(8)
        for _ in range(int(rng.integers(0, 30))):
            a, b = rng.choice(8, 2, replace=False)
            st.apply_layer(np.array([a]), np.array([b]), np.array([rng.integers(GROUP_ORDER)]))
        a, b, c, _ = (list(r) for r in part.regions())
        S = st.entropy
        plain = S(a) + S(b) + S(c) - S(a + b) - S(a + c) - S(b + c) + S(a + b + c)
        assert conditional_i3(CompressedState.from_state(st), part) == plain


def test_i3_matches_term_sum_during_trajectories():
    for geometry, L in (("square", 8), ("chain", 12)):
        spec = CircuitSpec.symmetric(0.2, geometry=geometry, L=L, p=0.15, depth=20)
        parts = [partition_four(geometry, L)]
        if geometry == "square":
            parts.append(partition_four(geometry, L, "quadrants"))
        checked = []

        def hook(state, step):
            for part in parts:
                assert conditional_i3(state, part) == i3_by_terms(state, part)
            checked.append(step)
        run_trajectory(spec, {}, 0, state_hook=hook)
        assert len(checked) == 20


def test_region_rank_full_and_empty():
    cs = CompressedState.initial(6, "pure_zero")
    assert region_rank(cs, range(6)) == 6
    assert region_rank(cs, []) == 0


def test_area_law_i3_vanishes():
    spec = CircuitSpec.symmetric(0.1, geometry="square", L=8, p=0.5)
    v = ensemble(spec, ["i3"], 200)["i3"][:, -1]
    assert abs(v.mean()) <= 3 * max(v.std(), 1e-12) / np.sqrt(v.size) + 1e-12


def test_i3_invariant_under_cyclic_relabeling():
    spec = CircuitSpec.symmetric(0.1, geometry="chain", L=16, p=0.1)
    part = partition_four("chain", 16)
    obs = {"i3": lambda s: conditional_i3(s, part),
           "i3_rot": lambda s: conditional_i3(s, part.rotated())}
    recs = [run_trajectory(spec, obs, t) for t in range(300)]
    a = np.array([r.values["i3"][-1] for r in recs])
    b = np.array([r.values["i3_rot"][-1] for r in recs])
    se = np.std(a - b) / np.sqrt(a.size)
    assert abs(a.mean() - b.mean()) <= 3 * se + 1e-12


# ---------------------------------------------------------------- bipartite CEE


def test_bipartite_examples():
    assert bipartite_cee(CompressedState.initial(8)) == 0
    spec = CircuitSpec(geometry="chain", L=8, p=0.0, depth=80)
    v = ensemble(spec, ["cee_half"], 30)["cee_half"][:, -1]
    assert v.max() == 4 and v.mean() > 3
    with pytest.raises(ValueError):
        bipartite_cee(CompressedState.initial(5))
    cs = CompressedState.initial(16)
    assert bipartite_cee(cs, geometry="square", L=4) == 0


def test_half_cee_sign_structure_off_zero_field():
    ps = (0.1, 0.3, 0.5)
    means = {}
    for ratio in (0.7, 0.3):
        ch = (ChannelRate("dephasing", "dephasing", 0.2 * ratio, 0.2 * (1 - ratio)),)
        m = []
        for p in ps:
            spec = CircuitSpec(geometry="square", L=4, p=p, channels=ch)
            m.append(ensemble(spec, ["cee_half"], 200)["cee_half"][:, -1].mean())
        means[ratio] = np.array(m)
    # q_n > q_e: positive and decreasing in p; q_n < q_e: negative and increasing
    assert (means[0.7] > 0).all() and (np.diff(means[0.7]) < 0).all()
    assert (means[0.3] < 0).all() and (np.diff(means[0.3]) > 0).all()


# ---------------------------------------------------------------- purification


def test_purification_examples():
    spec = CircuitSpec(geometry="square", L=4, p=1.0, depth=3, initial="maximally_mixed")
    curve = purification_curve(spec)
    assert curve.shape == (3,) and (curve[1:] == 0).all()
    spec = CircuitSpec(geometry="square", L=4, p=0.0, depth=5, initial="maximally_mixed")
    assert (purification_curve(spec) == 16).all()
    with pytest.raises(ValueError):
        purification_curve(CircuitSpec(geometry="square", L=4))


def test_cee_full_equals_full_region_cee():
    rng = np.random.default_rng(1)
    spec = CircuitSpec.symmetric(0.2, geometry="chain", L=8, p=0.2, depth=10,
                                 initial="maximally_mixed")

    def hook(state, step):
        assert cee_full(state) == state.cee(range(8))
    run_trajectory(spec, {}, int(rng.integers(100)), state_hook=hook)


def test_purification_non_increasing_in_expectation():
    spec = CircuitSpec.symmetric(0.1, geometry="square", L=4, p=0.2, depth=12,
                                 initial="maximally_mixed", record="all")
    curves = ensemble(spec, ["cee_full"], 300)["cee_full"]
    mean = curves.mean(0)
    diffs = np.diff(curves, axis=1)
    se = diffs.std(0) / np.sqrt(curves.shape[0])
    assert (np.diff(mean) <= 3 * se + 1e-12).all()
    assert mean[-1] < mean[0]


def test_unknown_observable_rejected():
    with pytest.raises(ValueError):
        make_observables(["negativity"], "chain", 8)
