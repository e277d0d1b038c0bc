"""Experiment orchestration: grid expansion, parallel trajectories, aggregation."""
from __future__ import annotations

import datetime as _dt
import itertools
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import __version__
from ..circuit_engine import ChannelRate, CircuitSpec, run_trajectory
from ..fss_collapse import CollapseError, ScanPoint, crossing_estimate, fit_collapse
from ..observables import make_observables
from .config import ExperimentConfig
from .io import Progress, ResultRow, read_results, write_json, write_results

EXPERIMENT_FILES = {
    "scan": "scan", "collapse": "collapse", "purification": "purification",
    "noise_estimate": "noise_estimate", "unequal_rates": "unequal_rates",
    "replica_verify": "replica_verify",
}


@dataclass(frozen=True)
class GridPoint:
    L: int
    p: float
    q_n: float
    q_e: float

    @property
    def key(self) -> str:
        return f"L={self.L}|p={self.p!r}|q_n={self.q_n!r}|q_e={self.q_e!r}"

    @property
    def index(self) -> int:
        """Seed sub-key derived from the point values, so adding grid points
        does not change the random streams of existing ones."""
        return zlib.crc32(self.key.encode())


def grid(cfg: ExperimentConfig) -> list[GridPoint]:
    return [GridPoint(int(L), float(p), float(qn), float(qe))
            for L, (qn, qe), p in itertools.product(cfg.L, cfg.rate_pairs(), cfg.p)]


def circuit_spec(cfg: ExperimentConfig, pt: GridPoint) -> CircuitSpec:
    qe_kinds = cfg.qe_channels or cfg.channels
    chans = tuple(ChannelRate(n, e, pt.q_n, pt.q_e) for n, e in zip(cfg.channels, qe_kinds))
    rec = cfg.record_mode()
    depth = cfg.depth_for(pt.L)
    if rec == "L":
        record = (min(pt.L, depth),)
    elif rec in ("all", "last"):
        record = rec
    else:
        record = (int(rec),)
    return CircuitSpec(geometry=cfg.geometry, L=pt.L, p=pt.p, channels=chans, depth=depth,
                       initial=cfg.initial_state(), master_seed=cfg.seed,
                       event_order=tuple(cfg.event_order), layer_order=tuple(cfg.layer_order),
                       record=record)


def _chunk_task(args):
    """Sum and sum of squares of the final recorded value per observable over
    trajectories ``[start, stop)``."""
    cfg, pt, start, stop = args
    spec = circuit_spec(cfg, pt)
    obs = make_observables(cfg.observable_names(), cfg.geometry, pt.L, cfg.partition)
    names = list(obs)
    s = np.zeros(len(names))
    ss = np.zeros(len(names))
    for t in range(start, stop):
        rec = run_trajectory(spec, obs, t, pt.index)
        v = np.array([rec.values[n][-1] for n in names])
        s += v
        ss += v * v
    return s, ss


def aggregate(chunks, n: int):
    """Mean and standard error from per-chunk sums combined in fixed order."""
    s = np.zeros_like(chunks[0][0])
    ss = np.zeros_like(chunks[0][1])
    for a, b in chunks:
        s = s + a
        ss = ss + b
    mean = s / n
    if n > 1:
        var = np.maximum(ss - s * s / n, 0.0) / (n - 1)
        se = np.sqrt(var / n)
    else:
        se = np.zeros_like(mean)
    return mean, se


def simulate_grid(cfg: ExperimentConfig, out_dir: str | None = None, log=None) -> list[ResultRow]:
    """Run every grid point; resumable through a progress file in ``out_dir``."""
    pts = grid(cfg)
    names = list(cfg.observable_names())
    n = cfg.n_realizations
    bounds = list(range(0, n, cfg.chunk)) + [n]
    progress = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        progress = Progress(os.path.join(out_dir, f"{EXPERIMENT_FILES[cfg.experiment]}.partial.jsonl"),
                            cfg.hash())
    threads = cfg.thread_count()
    pool = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    rows: list[ResultRow] = []
    try:
        for pt in pts:
            if progress is not None and pt.key in progress.done:
                rows.extend(progress.done[pt.key])
                continue
            t0 = time.perf_counter()
            tasks = [(cfg, pt, a, b) for a, b in zip(bounds[:-1], bounds[1:])]
            chunks = list(pool.map(_chunk_task, tasks)) if pool else [_chunk_task(t) for t in tasks]
            mean, se = aggregate(chunks, n)
            wall = 0.0 if cfg.deterministic_timing else time.perf_counter() - t0
            pt_rows = [ResultRow(cfg.experiment, pt.L, pt.p, pt.q_n, pt.q_e, name, float(mean[i]),
                                 float(se[i]), n, wall) for i, name in enumerate(names)]
            rows.extend(pt_rows)
            if progress is not None:
                progress.add(pt.key, pt_rows)
            if log:
                log(f"{pt.key}: " + ", ".join(f"{r.observable}={r.mean:.4f}+-{r.stderr:.4f}"
                                               for r in pt_rows) + f" ({wall:.1f}s)")
    finally:
        if pool:
            pool.shutdown()
    return rows


# ---------------------------------------------------------------- analyses


class EstimateError(RuntimeError):
    pass


def _poly_roots_in(coef, lo, hi):
    roots = np.roots(coef) if np.any(np.abs(coef) > 0) else np.array([])
    real = roots[np.abs(roots.imag) < 1e-9].real
    return sorted(r for r in real if lo - 1e-12 <= r <= hi + 1e-12)


def estimate_noise_rate(rows, observable: str = "cee_half", degree: int = 2, L: int | None = None):
    """Intersection of ``observable`` vs ``q_n/q`` curves for different ``p``.

    Each p-curve is fitted by a polynomial of ``degree``; every pair of curves
    contributes the intersection inside the scanned ratio range (the one nearest
    the range centre if several). Returns ``(estimate, (lo, hi), crossings)``
    with the mean and the spread of the pairwise intersections.
    """
    sel = [r for r in rows if r.observable == observable and (L is None or r.L == L)]
    if L is None and len({r.L for r in sel}) > 1:
        raise EstimateError("rows span several sizes; pass L")
    curves: dict[float, list] = {}
    for r in sel:
        q = r.q_n + r.q_e
        if q <= 0:
            raise EstimateError("total rate q must be positive")
        curves.setdefault(r.p, []).append((r.q_n / q, r.mean))
    if len(curves) < 2:
        raise EstimateError("need at least two distinct p values")
    fits = {}
    lo = hi = None
    for p, pts in sorted(curves.items()):
        pts.sort()
        if len(pts) < 4:
            raise EstimateError(f"p={p}: need at least 4 ratio points, got {len(pts)}")
        x = np.array([a for a, _ in pts])
        y = np.array([b for _, b in pts])
        fits[p] = np.polyfit(x, y, degree)
        lo = x.min() if lo is None else max(lo, x.min())
        hi = x.max() if hi is None else min(hi, x.max())
    crossings = []
    diagnostics = []
    centre = 0.5 * (lo + hi)
    for p1, p2 in itertools.combinations(sorted(fits), 2):
        diff = fits[p1] - fits[p2]
        if np.allclose(diff, 0.0, atol=1e-12):
            raise EstimateError(f"degenerate intersection: curves p={p1} and p={p2} coincide")
        roots = _poly_roots_in(np.trim_zeros(diff, "f"), lo, hi)
        if not roots:
            vals = np.polyval(diff, [lo, hi])
            diagnostics.append(f"p={p1} vs p={p2}: difference {vals[0]:+.4g} at {lo:.3f}, "
                               f"{vals[1]:+.4g} at {hi:.3f}")
            continue
        crossings.append((p1, p2, min(roots, key=lambda r: abs(r - centre))))
    if not crossings:
        raise EstimateError("curves do not intersect in the scanned ratio range: "
                            + "; ".join(diagnostics))
    vals = np.array([c[2] for c in crossings])
    return float(vals.mean()), (float(vals.min()), float(vals.max())), crossings


def rows_to_points(rows, observable: str) -> list[ScanPoint]:
    return [ScanPoint(r.p, r.L, r.mean, r.stderr, r.n_samples) for r in rows
            if r.observable == observable]


def replica_report(cfg: ExperimentConfig) -> dict:
    from ..replica_map import Permutation, ReplicaParams, symmetry_check

    out = {}
    for Q in cfg.Q:
        if Q == 2:
            params = ReplicaParams(2, cfg.d, Permutation((1, 0)))
        else:
            params = ReplicaParams.from_nk(Q - 1, 1, cfg.d)
        for kind in ("reset", "depolarizing", "dephasing_asymptotic"):
            half = cfg.bond_q / 2
            eq = symmetry_check(params, kind, cfg.bond_p, half, half)
            uneq = symmetry_check(params, kind, cfg.bond_p, 0.8 * cfg.bond_q, 0.2 * cfg.bond_q)
            out[f"Q={Q}/{kind}/equal"] = eq.to_record()
            out[f"Q={Q}/{kind}/unequal"] = uneq.to_record()
    return out


def replica_expected(report: dict) -> bool:
    """Equal rates: every family passes. Unequal rates: the field-swap family
    fails while the other two still pass."""
    for key, rec in report.items():
        fam = {k: v["pass"] for k, v in rec["families"].items()}
        if key.endswith("/equal"):
            if not all(fam.values()):
                return False
        elif not (fam["centralizer"] and fam["inversion"] and not fam["field_swap"]):
            return False
    return True


# ---------------------------------------------------------------- dispatch


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None, log=None) -> list[ResultRow]:
    """Run ``cfg`` and write results, manifest and any analysis record."""
    out_dir = out_dir or cfg.output
    os.makedirs(out_dir, exist_ok=True)
    stem = EXPERIMENT_FILES[cfg.experiment]
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    extra = {}
    rows: list[ResultRow] = []
    if cfg.experiment == "replica_verify":
        report = replica_report(cfg)
        write_json(report, os.path.join(out_dir, f"{stem}.json"))
        extra["all_expected"] = replica_expected(report)
    elif cfg.experiment == "collapse" and cfg.input:
        rows = read_results(cfg.input)
    else:
        rows = simulate_grid(cfg, out_dir, log)
    if cfg.experiment != "replica_verify" and not (cfg.experiment == "collapse" and cfg.input):
        write_results(rows, os.path.join(out_dir, f"{stem}.csv"))
    if cfg.experiment == "collapse":
        pts = rows_to_points(rows, cfg.observable)
        try:
            res = fit_collapse(pts, poly_order=cfg.poly_order, threshold=cfg.threshold,
                               weighted=cfg.weighted)
            rec = res.to_record()
        except CollapseError as exc:
            rec = {"error": str(exc)}
        try:
            rec["crossing"] = crossing_estimate(pts)[0]
        except CollapseError as exc:
            rec["crossing_error"] = str(exc)
        write_json(rec, os.path.join(out_dir, "collapse_result.json"))
        extra["collapse"] = rec
    if cfg.experiment == "noise_estimate":
        per_l = {}
        for L in sorted({r.L for r in rows}):
            try:
                est, (lo, hi), _ = estimate_noise_rate(rows, degree=cfg.fit_degree, L=L)
                per_l[str(L)] = {"ratio": est, "lo": lo, "hi": hi}
            except EstimateError as exc:
                per_l[str(L)] = {"error": str(exc)}
        write_json(per_l, os.path.join(out_dir, "noise_estimate_result.json"))
        extra["noise_estimate"] = per_l
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "version": __version__,
        "started": "" if cfg.deterministic_timing else started,
        "finished": "" if cfg.deterministic_timing
        else _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "error_convention": "stderr = sample standard deviation / sqrt(n_samples)",
        **extra,
    }
    write_json(manifest, os.path.join(out_dir, f"{stem}.manifest.json"))
    if out_dir is not None and cfg.experiment != "replica_verify":
        p = os.path.join(out_dir, f"{stem}.partial.jsonl")
        if os.path.exists(p):
            os.remove(p)
    return rows


__all__ = ["GridPoint", "grid", "circuit_spec", "simulate_grid", "aggregate", "estimate_noise_rate",
           "EstimateError", "run_experiment", "rows_to_points", "replica_report", "replica_expected"]
