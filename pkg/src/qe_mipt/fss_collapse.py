"""Finite-size-scaling data collapse.

Points ``(p, L, y)`` are rescaled to ``x = (p - p_c) L**(1/nu)``; a single
polynomial in the normalized variable ``x / max|x|`` is least-squares fitted to
all points and the sum of squared residuals is the collapse residue. The best
``(p_c, nu)`` minimizes the residue (Nelder-Mead, multi-start); uncertainties
are the bounding box of the region where the residue stays below a threshold
factor times the minimum.
"""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize


@dataclass(frozen=True)
class ScanPoint:
    p: float
    L: int
    value: float
    stderr: float = 0.0
    n_samples: int = 1

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be non-negative")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")


@dataclass(frozen=True)
class CollapseResult:
    """Fitted critical point and exponent.

    Attributes
    ----------
    p_c, nu : float
    eps_min : float
        Residue at the optimum.
    p_c_interval, nu_interval : tuple of float
        Bounding box of ``{residue <= threshold * eps_min}``.
    """

    p_c: float
    nu: float
    eps_min: float
    p_c_interval: tuple
    nu_interval: tuple

    def to_record(self) -> dict:
        return {"p_c": self.p_c, "nu": self.nu, "eps_min": self.eps_min,
                "p_c_lo": self.p_c_interval[0], "p_c_hi": self.p_c_interval[1],
                "nu_lo": self.nu_interval[0], "nu_hi": self.nu_interval[1]}

    def to_json(self) -> str:
        return json.dumps(self.to_record(), indent=2, sort_keys=True)


class CollapseError(RuntimeError):
    """Raised for degenerate data or failed optimization; ``best`` holds the
    best parameters found so far when available."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


def _arrays(points: Sequence[ScanPoint]):
    # sort so the objective does not depend on input order
    pts = sorted(points, key=lambda s: (s.L, s.p, s.value, s.stderr))
    p = np.array([s.p for s in pts], dtype=float)
    L = np.array([s.L for s in pts], dtype=float)
    y = np.array([s.value for s in pts], dtype=float)
    w = np.array([1.0 / s.stderr ** 2 if s.stderr > 0 else 1.0 for s in pts])
    return p, L, y, w


def _residue(p, L, y, w, p_c, nu, poly_order, weighted):
    if not np.isfinite(nu) or nu <= 0:
        return np.inf
    x = (p - p_c) * L ** (1.0 / nu)
    scale = np.max(np.abs(x))
    if scale == 0 or not np.isfinite(scale):
        raise CollapseError("all rescaled points coincide")
    u = x / scale
    if np.unique(u).size < poly_order + 1:
        raise CollapseError(f"need at least {poly_order + 1} distinct rescaled points "
                            f"for a degree-{poly_order} fit")
    vand = np.vander(u, poly_order + 1)
    sw = np.sqrt(w) if weighted else np.ones_like(y)
    a = vand * sw[:, None]
    b = y * sw
    coef, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank < poly_order + 1:
        raise CollapseError("rank-deficient design matrix: insufficient or degenerate data")
    r = a @ coef - b
    return float(r @ r)


def collapse_residue(points: Sequence[ScanPoint], p_c: float, nu: float, poly_order: int = 12,
                     weighted: bool = False) -> float:
    """Sum of squared residuals of the polynomial fit to the rescaled data."""
    if len(points) < poly_order + 2:
        raise CollapseError(f"need at least {poly_order + 2} points, got {len(points)}")
    if nu <= 0:
        raise ValueError("nu must be positive")
    p, L, y, w = _arrays(points)
    return _residue(p, L, y, w, p_c, nu, poly_order, weighted)


def _objective(points, poly_order, weighted):
    p, L, y, w = _arrays(points)

    def f(theta):
        try:
            return _residue(p, L, y, w, theta[0], theta[1], poly_order, weighted)
        except CollapseError:
            return np.inf
    return f


def fit_collapse(points: Sequence[ScanPoint], poly_order: int = 12, threshold: float = 1.01,
                 nu_range=(0.5, 1.5), starts: int = 5, weighted: bool = False,
                 max_iter: int = 10_000, grid: int = 101) -> CollapseResult:
    """Minimize the residue over ``(p_c, nu)`` from a ``starts x starts`` grid of
    Nelder-Mead starting points, then attach threshold intervals."""
    if len({s.L for s in points}) < 3:
        raise CollapseError("collapse needs at least three distinct sizes")
    collapse_residue(points, float(np.mean([s.p for s in points])), 1.0, poly_order, weighted)
    f = _objective(points, poly_order, weighted)
    ps = np.array([s.p for s in points])
    best = None
    for pc0, nu0 in itertools.product(np.linspace(ps.min(), ps.max(), starts),
                                      np.linspace(nu_range[0], nu_range[1], starts)):
        res = minimize(f, np.array([pc0, nu0]), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-10, "maxiter": max_iter,
                                "maxfev": 4 * max_iter})
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        raise CollapseError("optimization failed", best=None if best is None else best.x)
    if not best.success and best.nit >= max_iter:
        raise CollapseError("Nelder-Mead did not converge", best=best.x)
    p_c, nu = float(best.x[0]), float(best.x[1])
    eps = float(best.fun)
    prelim = CollapseResult(p_c, nu, eps, (p_c, p_c), (nu, nu))
    pci, nui = uncertainty_region(points, prelim, threshold=threshold, poly_order=poly_order,
                                  weighted=weighted, grid=grid)
    return CollapseResult(p_c, nu, eps, pci, nui)


def _scan(f, p_c, nu, hw_p, hw_nu, grid):
    pcs = np.linspace(p_c - hw_p, p_c + hw_p, grid)
    nus = np.linspace(max(nu - hw_nu, 1e-6), nu + hw_nu, grid)
    res = np.array([[f((a, b)) for b in nus] for a in pcs])
    return pcs, nus, res


def uncertainty_region(points: Sequence[ScanPoint], result: CollapseResult, threshold: float = 1.01,
                       poly_order: int = 12, weighted: bool = False, grid: int = 101,
                       half_widths: tuple | None = None):
    """Bounding box of ``{(p_c, nu): residue <= threshold * eps_min}`` on a grid
    around the optimum. The scan widens once if the region touches its edge
    and is refined once around the region found."""
    f = _objective(points, poly_order, weighted)
    level = threshold * result.eps_min
    ps = np.array([s.p for s in points])
    hw_p, hw_nu = half_widths or (0.05 * (ps.max() - ps.min()) + 1e-6, 0.1 * result.nu)
    for attempt in range(2):
        pcs, nus, res = _scan(f, result.p_c, result.nu, hw_p, hw_nu, grid)
        inside = res <= level
        inside[grid // 2, grid // 2] = True  # the optimum itself
        ii, jj = np.nonzero(inside)
        touches = ii.min() == 0 or jj.min() == 0 or ii.max() == grid - 1 or jj.max() == grid - 1
        if not touches:
            break
        if attempt == 1:
            raise CollapseError("threshold region touches the scan boundary after widening",
                                best=(result.p_c, result.nu))
        hw_p *= 4
        hw_nu *= 4
    # refine once on a grid fitted to the region found (one cell of margin)
    dp = pcs[1] - pcs[0]
    dn = nus[1] - nus[0]
    lo_p, hi_p = pcs[ii.min()] - dp, pcs[ii.max()] + dp
    lo_n, hi_n = nus[jj.min()] - dn, nus[jj.max()] + dn
    if hi_p > lo_p and hi_n > lo_n and threshold > 1.0:
        rp = np.linspace(lo_p, hi_p, grid)
        rn = np.linspace(max(lo_n, 1e-6), hi_n, grid)
        res2 = np.array([[f((a, b)) for b in rn] for a in rp])
        ins2 = res2 <= level
        if ins2.any():
            i2, j2 = np.nonzero(ins2)
            lo_pc, hi_pc = min(rp[i2.min()], result.p_c), max(rp[i2.max()], result.p_c)
            lo_nu, hi_nu = min(rn[j2.min()], result.nu), max(rn[j2.max()], result.nu)
            return (float(lo_pc), float(hi_pc)), (float(lo_nu), float(hi_nu))
    return ((float(min(pcs[ii.min()], result.p_c)), float(max(pcs[ii.max()], result.p_c))),
            (float(min(nus[jj.min()], result.nu)), float(max(nus[jj.max()], result.nu))))


# ---------------------------------------------------------------- crossings


def crossing_points(points: Sequence[ScanPoint]) -> list[tuple[int, int, float]]:
    """Pairwise crossings of size curves ``y_L(p)`` by linear interpolation of
    their difference: ``[(L1, L2, p_cross), ...]`` (all sign changes)."""
    by_l: dict[int, dict[float, float]] = {}
    for s in points:
        by_l.setdefault(s.L, {})[s.p] = s.value
    out = []
    for l1, l2 in itertools.combinations(sorted(by_l), 2):
        common = sorted(set(by_l[l1]) & set(by_l[l2]))
        diff = np.array([by_l[l2][p] - by_l[l1][p] for p in common])
        for k in range(len(common) - 1):
            d0, d1 = diff[k], diff[k + 1]
            if d0 == 0:
                out.append((l1, l2, common[k]))
            elif d0 * d1 < 0:
                t = d0 / (d0 - d1)
                out.append((l1, l2, common[k] + t * (common[k + 1] - common[k])))
        if len(common) and diff[-1] == 0:
            out.append((l1, l2, common[-1]))
    return out


def crossing_estimate(points: Sequence[ScanPoint], pick: str = "median") -> tuple[float, list]:
    """Mean of the pairwise crossings, one per size pair.

    ``pick="median"`` keeps the crossing nearest the median of all crossings.
    ``pick="first"`` keeps the crossing at the smallest ``p``; use it when the
    curves all approach zero past the transition, where noise-level sign
    changes would otherwise outnumber the real one.
    """
    if pick not in ("median", "first"):
        raise ValueError("pick must be 'median' or 'first'")
    cr = crossing_points(points)
    if not cr:
        raise CollapseError("size curves do not cross in the scanned range")
    med = float(np.median([c[2] for c in cr]))
    per_pair = {}
    for l1, l2, pc in cr:
        key = (l1, l2)
        if key not in per_pair:
            per_pair[key] = pc
        elif pick == "first":
            per_pair[key] = min(per_pair[key], pc)
        elif abs(pc - med) < abs(per_pair[key] - med):
            per_pair[key] = pc
    return float(np.mean(list(per_pair.values()))), sorted((k[0], k[1], v) for k, v in per_pair.items())


# ---------------------------------------------------------------- io


def read_points(path, observable: str, experiment: str | None = None,
                filters: dict | None = None) -> list[ScanPoint]:
    """Load ``ScanPoint`` rows for one observable from a results CSV."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["observable"] != observable:
                continue
            if experiment is not None and row["experiment"] != experiment:
                continue
            if filters and any(abs(float(row[k]) - v) > 1e-12 for k, v in filters.items()):
                continue
            out.append(ScanPoint(p=float(row["p"]), L=int(row["L"]), value=float(row["mean"]),
                                 stderr=float(row["stderr"]), n_samples=int(row["n_samples"])))
    return out


def synthetic_points(f, p_c: float, nu: float, sizes: Iterable[int], ps: Iterable[float],
                     noise: float = 0.0, rng: np.random.Generator | None = None,
                     n_samples: int = 1) -> list[ScanPoint]:
    """``y = f((p - p_c) L**(1/nu))`` plus optional Gaussian noise of std ``noise``."""
    rng = rng or np.random.default_rng(0)
    out = []
    for L in sizes:
        for p in ps:
            y = float(f((p - p_c) * L ** (1.0 / nu)))
            if noise:
                y += float(rng.normal(0.0, noise))
            out.append(ScanPoint(float(p), int(L), y, noise, n_samples))
    return out


__all__ = ["ScanPoint", "CollapseResult", "CollapseError", "collapse_residue", "fit_collapse",
           "uncertainty_region", "crossing_points", "crossing_estimate", "read_points",
           "synthetic_points"]
