import json
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import contiguous_regions, random_program, run_compressed
from qe_mipt import _kernels_numpy, channels, circuit_engine, observables, stab_core
from qe_mipt.circuit_engine import ChannelRate, CircuitSpec, run_trajectory
from qe_mipt.observables import make_observables

MODULES = (channels, circuit_engine, observables, stab_core)


@pytest.fixture
def numpy_kernels(monkeypatch):
    for mod in MODULES:
        monkeypatch.setattr(mod, "K", _kernels_numpy)


def _programs():
    rng = np.random.default_rng(71)
    out = []
    for trial in range(60):
        n = int(rng.integers(2, 9))
        out.append((n, ("pure_zero", "maximally_mixed")[trial % 2],
                    random_program(rng, n, n_events=25), int(rng.integers(1 << 30))))
    return out


def _snapshot(n, init, prog, seed):
    cs = run_compressed(prog, n, init, np.random.default_rng(seed), track=True)
    cs.normalize_rows()
    return cs.x, cs.to_strings(), [cs.cee(m) for m in contiguous_regions(n)]


@pytest.fixture(scope="module")
def reference_snapshots():
    if circuit_engine.K is _kernels_numpy:
        pytest.skip("the default backend is already numpy")
    return [_snapshot(*args) for args in _programs()]


def test_numpy_kernels_match_on_random_programs(reference_snapshots, numpy_kernels):
    for args, ref in zip(_programs(), reference_snapshots):
        assert _snapshot(*args) == ref


def _trajectories():
    out = {}
    chans = (ChannelRate("depolarizing", "dephasing", 0.1, 0.15),
             ChannelRate("resetting", "resetting", 0.05, 0.05))
    for g, L in (("chain", 8), ("square", 4), ("square", 6)):
        for swap in (False, True):
            spec = CircuitSpec(geometry=g, L=L, p=0.2, depth=8, record="all", master_seed=5,
                               channels=chans, swap_roles=swap)
            obs = make_observables(["i3", "cee_half", "cee_full"], g, L)
            rec = run_trajectory(spec, obs, 2)
            out[(g, L, swap)] = ({k: v.tolist() for k, v in rec.values.items()}, rec.x,
                                 rec.counts.tolist())
    return out


def test_numpy_kernels_match_on_trajectories(monkeypatch):
    if circuit_engine.K is _kernels_numpy:
        pytest.skip("the default backend is already numpy")
    ref = _trajectories()
    for mod in MODULES:
        monkeypatch.setattr(mod, "K", _kernels_numpy)
    assert _trajectories() == ref


SCRIPT = """
import json
from qe_mipt import BACKEND
from qe_mipt.circuit_engine import CircuitSpec, run_trajectory
from qe_mipt.observables import make_observables
spec = CircuitSpec.symmetric(0.1, geometry="square", L=4, p=0.2, depth=6, record="all")
rec = run_trajectory(spec, make_observables(["i3", "cee_half"], "square", 4), 1)
print(json.dumps([BACKEND, rec.values["cee_half"].tolist()]))
"""


def _run(backend):
    env = dict(os.environ, QE_MIPT_BACKEND=backend)
    return subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True)


def test_environment_flag_selects_backend():
    a, b = _run("numba"), _run("numpy")
    assert a.returncode == b.returncode == 0, a.stderr + b.stderr
    name_a, vals_a = json.loads(a.stdout)
    name_b, vals_b = json.loads(b.stdout)
    assert (name_a, name_b) == ("numba", "numpy") and vals_a == vals_b
    bad = _run("fortran")
    assert bad.returncode != 0 and "QE_MIPT_BACKEND" in bad.stderr
