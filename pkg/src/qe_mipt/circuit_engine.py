"""Brickwall circuits in (1+1)-d and (2+1)-d with stochastic measurement,
noise and QE events, and trajectory execution on a :class:`CompressedState`."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from ._backend import kernels as K
from .channels import KIND_CODES, CompressedState
from .clifford2 import GROUP_ORDER, clifford_table

GEOMETRIES = ("chain", "square")
EVENT_CODES = {"measure": 0, "noise": 1, "qe": 2}
LAYER_NAMES = ("h_even", "h_odd", "v_even", "v_odd")


@dataclass(frozen=True)
class ChannelRate:
    """One (noise kind, QE kind) pair with its own rates."""

    noise: str = "dephasing"
    qe: str = "dephasing"
    q_n: float = 0.0
    q_e: float = 0.0

    def __post_init__(self):
        for k in (self.noise, self.qe):
            if k not in KIND_CODES:
                raise ValueError(f"unknown channel kind {k!r}")
        for name in ("q_n", "q_e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v}: probability out of range")


@dataclass(frozen=True)
class CircuitSpec:
    """Circuit geometry, rates, schedule options and seed.

    Parameters
    ----------
    geometry : {'chain', 'square'}
        1D ring of ``L`` sites or periodic ``L x L`` torus (``L`` even).
    L : int
        Linear size.
    p : float
        Measurement probability per site per inter-layer slot.
    channels : tuple of ChannelRate
        Noise/QE kinds with independent rates.
    depth : int, optional
        Number of time steps; defaults to ``10 * L``.
    initial : {'pure_zero', 'maximally_mixed'}
    master_seed : int
    event_order : tuple of str
        Order of the measure / noise / qe draws at one site.
    layer_order : tuple of str
        2D orientation sequence (names from ``LAYER_NAMES``).
    record : 'all', 'last' or tuple of int
        Time steps (1-based) at which observables are evaluated.
    swap_roles : bool
        Twin mode: noise events keep their fresh qubits (compressed) and QE
        events trace theirs out, under identical random draws. The conditional
        entropies then give ``S(M|E)``.
    """

    geometry: str = "chain"
    L: int = 8
    p: float = 0.0
    channels: tuple = ()
    depth: int | None = None
    initial: str = "pure_zero"
    master_seed: int = 0
    event_order: tuple = ("measure", "noise", "qe")
    layer_order: tuple = LAYER_NAMES
    record: object = "last"
    swap_roles: bool = False

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.L < 2:
            raise ValueError("L must be at least 2")
        if self.geometry == "square" and self.L % 2:
            raise ValueError("square geometry requires even L")
        if self.geometry == "chain" and self.L % 2:
            raise ValueError("chain geometry requires even L")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p}: probability out of range")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.initial not in ("pure_zero", "maximally_mixed"):
            raise ValueError(f"unknown initial state {self.initial!r}")
        if sorted(self.event_order) != sorted(EVENT_CODES):
            raise ValueError(f"event_order must be a permutation of {tuple(EVENT_CODES)}")
        if sorted(self.layer_order) != sorted(LAYER_NAMES):
            raise ValueError(f"layer_order must be a permutation of {LAYER_NAMES}")
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def n_sites(self) -> int:
        return self.L if self.geometry == "chain" else self.L * self.L

    @property
    def steps(self) -> int:
        return self.depth if self.depth is not None else 10 * self.L

    @classmethod
    def symmetric(cls, q: float, kind: str = "dephasing", **kw) -> "CircuitSpec":
        """Noise and QE of the same kind, each at rate ``q / 2``."""
        return cls(channels=(ChannelRate(kind, kind, q / 2, q / 2),), **kw)

    def recorded_steps(self) -> np.ndarray:
        if isinstance(self.record, str):
            if self.record == "all":
                return np.arange(1, self.steps + 1)
            if self.record == "last":
                return np.array([self.steps])
            raise ValueError(f"unknown record mode {self.record!r}")
        steps = np.array(sorted(set(int(t) for t in self.record)))
        if steps.size and (steps[0] < 1 or steps[-1] > self.steps):
            raise ValueError("recorded steps outside [1, depth]")
        return steps


@dataclass
class LayerSchedule:
    """Ordered layers; each layer holds arrays ``(qa, qb)`` of disjoint pairs."""

    layers: list

    def __len__(self) -> int:
        return len(self.layers)


def build_schedule(geometry: str, L: int, layer_order: Sequence[str] = LAYER_NAMES) -> LayerSchedule:
    if geometry == "chain":
        if L % 2:
            raise ValueError("chain brickwall requires even L")
        even = np.arange(0, L, 2)
        odd = np.arange(1, L, 2)
        return LayerSchedule([(even, even + 1), (odd, (odd + 1) % L)])
    if geometry != "square":
        raise ValueError(f"unknown geometry {geometry!r}")
    if L % 2:
        raise ValueError("square geometry requires even L")
    r, c = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    layers = {}
    for name in LAYER_NAMES:
        horiz = name.startswith("h")
        par = 0 if name.endswith("even") else 1
        sel = (c if horiz else r) % 2 == par
        rr, cc = r[sel], c[sel]
        a = rr * L + cc
        b = rr * L + (cc + 1) % L if horiz else ((rr + 1) % L) * L + cc
        layers[name] = (a.astype(np.int64), b.astype(np.int64))
    return LayerSchedule([layers[n] for n in layer_order])


@dataclass
class TrajectoryRecord:
    """Layer-averaged observables at the recorded steps.

    Attributes
    ----------
    steps : ndarray of int
        Recorded time steps (1-based).
    values : dict of str -> ndarray
        Observable name to per-step layer averages.
    counts : ndarray, shape (depth, 3)
        Measurement, noise and QE events per step (all steps).
    x : int
        Final discard counter.
    """

    steps: np.ndarray
    values: dict
    counts: np.ndarray
    x: int = 0

    def at(self, name: str, step: int) -> float:
        i = int(np.searchsorted(self.steps, step))
        if i >= self.steps.size or self.steps[i] != step:
            raise KeyError(f"step {step} was not recorded")
        return float(self.values[name][i])


def trajectory_rng(master_seed: int, trajectory_index: int, grid_index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(grid_index), int(trajectory_index)))
    return np.random.Generator(np.random.PCG64(ss))


def _rate_arrays(spec: CircuitSpec):
    nk = np.array([KIND_CODES[c.noise] for c in spec.channels], dtype=np.int64)
    qk = np.array([KIND_CODES[c.qe] for c in spec.channels], dtype=np.int64)
    qn = np.array([c.q_n for c in spec.channels], dtype=np.float64)
    qe = np.array([c.q_e for c in spec.channels], dtype=np.float64)
    return nk, qn, qk, qe


def run_trajectory(spec: CircuitSpec,
                   observables: Mapping[str, Callable[[CompressedState], int]] | None = None,
                   trajectory_index: int = 0, grid_index: int = 0,
                   state_hook: Callable[[CompressedState, int], None] | None = None) -> TrajectoryRecord:
    """Run one trajectory; observables are evaluated after every layer of the
    recorded steps and averaged over the layers of that step.

    ``state_hook(state, step)`` (testing aid) is called at the end of each step.
    """
    observables = dict(observables or {})
    rng = trajectory_rng(spec.master_seed, trajectory_index, grid_index)
    n = spec.n_sites
    sched = build_schedule(spec.geometry, spec.L, spec.layer_order)
    tab = clifford_table()
    state = CompressedState.initial(n, spec.initial, track=False)
    cap = state.compact_at
    xs, zs, sg, tg = state.xs, state.zs, state.sg, state.tg
    nk, qn, qk, qe = _rate_arrays(spec)
    nch = nk.size
    order = np.array([EVENT_CODES[e] for e in spec.event_order], dtype=np.int64)
    if spec.swap_roles:
        order = np.where(order == 1, 2, np.where(order == 2, 1, order))
    outcomes = np.zeros(n, dtype=np.int64)
    counts = np.zeros((spec.steps, 3), dtype=np.int64)
    ev = np.zeros(3, dtype=np.int64)
    rec_steps = spec.recorded_steps()
    rec_set = set(int(t) for t in rec_steps)
    values = {name: np.zeros(rec_steps.size) for name in observables}
    npairs = sched.layers[0][0].size
    nrows = state.nrows
    x = 0
    ri = 0
    for t in range(1, spec.steps + 1):
        ev[:] = 0
        acc = {name: 0 for name in observables}
        for qa, qb in sched.layers:
            gidx = rng.integers(GROUP_ORDER, size=npairs)
            K.apply_layer(xs, zs, sg, (nrows + 63) >> 6, qa, qb, gidx, tab.mats, tab.anfs, False)
            u_meas = rng.random(n)
            u_noise = rng.random((nch, n))
            u_qe = rng.random((nch, n))
            if spec.swap_roles:
                nrows, dx = K.run_events(xs, zs, sg, tg, nrows, n, cap, order, u_meas, spec.p,
                                         u_qe, qe, qk, u_noise, qn, nk, outcomes, False, ev)
            else:
                nrows, dx = K.run_events(xs, zs, sg, tg, nrows, n, cap, order, u_meas, spec.p,
                                         u_noise, qn, nk, u_qe, qe, qk, outcomes, False, ev)
            x += dx
            if t in rec_set:
                state.nrows = nrows
                for name, fn in observables.items():
                    acc[name] += fn(state)
        counts[t - 1] = ev
        if t in rec_set:
            for name in observables:
                values[name][ri] = acc[name] / len(sched)
            ri += 1
        if state_hook is not None:
            state.nrows = nrows
            state.x = x
            state_hook(state, t)
    state.nrows = nrows
    state.x = x
    return TrajectoryRecord(steps=rec_steps, values=values, counts=counts, x=x)


def final_state(spec: CircuitSpec, trajectory_index: int = 0, grid_index: int = 0) -> CompressedState:
    """Convenience: run without observables and return the final state."""
    box = {}

    def grab(state, step):
        if step == spec.steps:
            box["s"] = state.copy()

    run_trajectory(replace(spec, record=()), {}, trajectory_index, grid_index, state_hook=grab)
    return box["s"]
