"""Box- and SINR-constrained maximization of a per-selection utility over transmit powers.

Three solvers share one contract (best feasible power vector, or ``feasible=False``):

* :func:`pattern_search_maximize`: multistart generalized pattern search on the coordinate
  directions, with a feasibility filter for the SINR floors.
* :func:`grid_search_maximize`: exhaustive uniform grid, used as a validation oracle.
* :func:`class_frontier`: exact enumeration for the linear interference model. Because the
  utility only sees each link's CQI class, the optimum is attained at a maximal feasible
  class triple, and each triple is checked by solving for its minimum-power vector.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from fdcell.link import CqiTable, LinkMatrix, PowerAllocation

NEG_INF = -math.inf
TARGET_MARGIN = 1e-9  # relative head-room so a solved SINR never rounds below its threshold


@dataclass(frozen=True)
class BoxBounds:
    lower: np.ndarray
    upper: np.ndarray
    active: np.ndarray

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        active = np.asarray(self.active, bool)
        hi = np.where(active, hi, 0.0)
        lo = np.where(active, lo, 0.0)
        if lo.shape != (3,) or np.any(lo < 0) or np.any(lo > hi):
            raise ValueError("need 0 <= lower <= upper for three power dimensions")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "active", active)

    @classmethod
    def for_selection(cls, p_max, active) -> BoxBounds:
        return cls(np.zeros(3), np.asarray(p_max, float), np.asarray(active, bool))

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, p: np.ndarray) -> np.ndarray:
        return np.clip(p, self.lower, self.upper)

    def contains(self, p) -> bool:
        p = np.asarray(p, float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))


@dataclass(frozen=True)
class SinrFloors:
    min_sinr_dl: float = 0.0
    min_sinr_ul: float = 0.0
    min_sinr_d2d: float = 0.0

    @classmethod
    def from_table(cls, table: CqiTable) -> SinrFloors:
        """Every link must reach the lowest CQI class."""
        t = float(table.thresholds_linear[0])
        return cls(t, t, t)

    def as_array(self) -> np.ndarray:
        return np.array([self.min_sinr_dl, self.min_sinr_ul, self.min_sinr_d2d], dtype=float)


@dataclass(frozen=True)
class OptimizerConfig:
    initial_mesh: float = 0.25
    mesh_contraction: float = 0.5
    mesh_expansion: float = 2.0
    mesh_tolerance: float = 1e-4
    max_evaluations: int = 2000
    multistart_points: tuple[str, ...] = ("full_power", "center", "coarse_grid")
    coarse_levels: int = 5
    method: str = "frontier"  # "frontier" (exact) or "pattern"
    floors: SinrFloors | None = None  # None: lowest CQI threshold of the table in use

    def __post_init__(self):
        if not 0 < self.mesh_contraction < 1 < self.mesh_expansion:
            raise ValueError("need 0 < mesh_contraction < 1 < mesh_expansion")
        if self.mesh_tolerance <= 0 or self.initial_mesh <= 0:
            raise ValueError("mesh sizes must be positive")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be positive")
        if self.method not in ("frontier", "pattern"):
            raise ValueError(f"unknown optimizer method {self.method!r}")
        unknown = set(self.multistart_points) - {"full_power", "center", "coarse_grid"}
        if unknown:
            raise ValueError(f"unknown start strategies {sorted(unknown)}")
        object.__setattr__(self, "multistart_points", tuple(self.multistart_points))


@dataclass(frozen=True)
class OptResult:
    best_power: PowerAllocation
    best_utility: float
    feasible: bool
    evaluations: int
    extras: dict = field(default_factory=dict, compare=False, repr=False)


class _Evaluator:
    """Box clipping, SINR floor filter and evaluation count for scalar objectives."""

    def __init__(self, objective, bounds: BoxBounds, floors: SinrFloors | None, sinr_fn):
        if floors is not None and sinr_fn is None:
            raise ValueError("SINR floors need a sinr_fn")
        self.objective = objective
        self.bounds = bounds
        self.floor = None if floors is None else np.where(bounds.active, floors.as_array(), 0.0)
        self.sinr_fn = sinr_fn
        self.count = 0
        self.best_x: np.ndarray | None = None
        self.best_f = NEG_INF

    def __call__(self, p) -> tuple[np.ndarray, float]:
        x = self.bounds.clip(np.asarray(p, float))
        self.count += 1
        if self.floor is not None and np.any(np.asarray(self.sinr_fn(x))[self.bounds.active] < self.floor[self.bounds.active]):
            f = NEG_INF
        else:
            f = float(self.objective(x))
        if self.best_x is None or f > self.best_f:
            self.best_x, self.best_f = x, f
        return x, f


def _grid_points(bounds: BoxBounds, levels: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, levels) if a else np.zeros(1) for lo, hi, a in zip(bounds.lower, bounds.upper, bounds.active)]
    return np.array(list(itertools.product(*axes)))


def _poll_directions(bounds: BoxBounds) -> list[tuple[int, float]]:
    dims = np.flatnonzero(bounds.active & (bounds.width > 0))
    return [(int(i), sign) for i in dims for sign in (1.0, -1.0)]


def _poll(ev: _Evaluator, x: np.ndarray, f: float, cfg: OptimizerConfig) -> tuple[np.ndarray, float]:
    polls = _poll_directions(ev.bounds)
    mesh, used = cfg.initial_mesh, 0
    while polls and mesh >= cfg.mesh_tolerance and used < cfg.max_evaluations:
        improved = False
        for i, sign in polls:
            cand = x.copy()
            cand[i] += sign * mesh * ev.bounds.width[i]
            cand = ev.bounds.clip(cand)
            if np.array_equal(cand, x):
                continue
            cand, fc = ev(cand)
            used += 1
            if fc > f:
                x, f, improved = cand, fc, True
            if improved or used >= cfg.max_evaluations:
                break
        mesh = min(mesh * cfg.mesh_expansion, 1.0) if improved else mesh * cfg.mesh_contraction
    return x, f


def pattern_search_maximize(
    objective: Callable[[np.ndarray], float],
    bounds: BoxBounds,
    floors: SinrFloors | None = None,
    cfg: OptimizerConfig | None = None,
    sinr_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    seeds: Iterable[np.ndarray] | None = None,
) -> OptResult:
    """Multistart generalized pattern search over the active power dimensions.

    Polls +/- each active coordinate in a fixed order, moves to the first strictly improving
    feasible point and expands the mesh, otherwise contracts it. Points violating a SINR floor
    score ``-inf``. ``seeds`` are evaluated and the best one is refined as an extra start, so
    the result is never worse than any feasible seed.
    """
    cfg = cfg or OptimizerConfig()
    ev = _Evaluator(objective, bounds, floors, sinr_fn)
    starts: list[tuple[np.ndarray, float]] = []
    for strategy in cfg.multistart_points:
        if strategy == "full_power":
            starts.append(ev(bounds.upper))
        elif strategy == "center":
            starts.append(ev(bounds.lower + bounds.width / 2.0))
        elif strategy == "coarse_grid":
            starts.append(max((ev(p) for p in _grid_points(bounds, cfg.coarse_levels)), key=lambda t: t[1]))
    if seeds is not None:
        evaluated = [ev(s) for s in seeds]
        if evaluated:
            starts.append(max(evaluated, key=lambda t: t[1]))
    if not starts:
        starts.append(ev(bounds.upper))
    for x, f in starts:
        _poll(ev, x, f, cfg)
    return _result(ev.best_x, ev.best_f, ev.count)


def _result(x, f, count) -> OptResult:
    feasible = f > NEG_INF
    power = PowerAllocation(*map(float, x)) if feasible else PowerAllocation()
    return OptResult(best_power=power, best_utility=f if feasible else NEG_INF, feasible=feasible, evaluations=count)


def grid_search_maximize(
    objective: Callable,
    bounds: BoxBounds,
    floors: SinrFloors | None = None,
    levels_per_dim: int = 11,
    sinr_fn: Callable | None = None,
    vectorized: bool = False,
) -> OptResult:
    """Exhaustive search over a uniform grid including both box endpoints.

    With ``vectorized`` the objective and ``sinr_fn`` take an ``(M, 3)`` array of power
    vectors. Ties go to the lexicographically smallest power vector.
    """
    if levels_per_dim < 2:
        raise ValueError("levels_per_dim must be at least 2")
    if floors is not None and sinr_fn is None:
        raise ValueError("SINR floors need a sinr_fn")
    pts = _grid_points(bounds, levels_per_dim)  # product order is lexicographic ascending
    if vectorized:
        vals = np.asarray(objective(pts), dtype=float)
        if floors is not None:
            s = np.asarray(sinr_fn(pts))
            ok = np.all((s >= floors.as_array()) | ~bounds.active, axis=1)
            vals = np.where(ok, vals, NEG_INF)
    else:
        vals = np.empty(len(pts))
        floor = None if floors is None else floors.as_array()
        for n, p in enumerate(pts):
            if floor is not None and np.any(np.asarray(sinr_fn(p))[bounds.active] < floor[bounds.active]):
                vals[n] = NEG_INF
            else:
                vals[n] = objective(p)
    best = int(np.argmax(vals))
    return _result(pts[best], float(vals[best]), len(pts))


def min_power_for_targets(link: LinkMatrix, targets: np.ndarray) -> np.ndarray:
    """Smallest power vectors meeting each row of SINR ``targets`` exactly; NaN rows are infeasible.

    Solves ``own_i p_i = t_i (noise_i + sum_j cross_ij p_j)``. A strictly positive solution
    exists iff the targets are jointly achievable without a power cap; it is then the
    componentwise-minimal achieving vector.
    """
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    m = np.zeros((len(t), 3, 3))
    m[:, [0, 1, 2], [0, 1, 2]] = link.own
    m -= t[:, :, None] * link.cross[None, :, :]
    rhs = t * link.noise
    try:
        p = np.linalg.solve(m, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError:
        p = np.full_like(t, np.nan)
        for n in range(len(t)):
            try:
                p[n] = np.linalg.solve(m[n], rhs[n])
            except np.linalg.LinAlgError:
                pass
    p = np.where(t > 0, p, 0.0)  # zero-target rows solve to round-off, not exactly 0
    p[np.any((t > 0) & ~(p > 0), axis=1)] = np.nan
    return p


@dataclass(frozen=True)
class Frontier:
    """Maximal feasible CQI-class triples of one selection and their minimum-power vectors.

    Rows are ordered by ascending total power.
    """

    classes: np.ndarray  # (K, 3) int, 0 for inactive slots
    powers: np.ndarray  # (K, 3) watts
    sinrs: np.ndarray  # (K, 3) linear

    def __len__(self) -> int:
        return len(self.classes)


def class_frontier(link: LinkMatrix, p_max, table: CqiTable, floors: SinrFloors | None = None) -> Frontier:
    """Enumerate every class triple the power box can support and keep the maximal ones."""
    floor = np.zeros(3) if floors is None else floors.as_array()
    thr = np.concatenate([[0.0], table.thresholds_linear])
    n_classes = len(thr)
    axes = []
    for i in range(3):
        if not link.active[i]:
            axes.append(np.zeros(1, dtype=int))
            continue
        c_min = int(table.cqi_class(floor[i])) if floor[i] > 0 else 0
        axes.append(np.arange(c_min, n_classes))
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    targets = np.where(link.active, np.maximum(thr[grid], floor), 0.0)
    targets = np.where(targets > 0, targets * (1.0 + TARGET_MARGIN), 0.0)
    p = min_power_for_targets(link, targets)
    ok = np.all(np.isfinite(p), axis=1) & np.all(p <= np.asarray(p_max, float), axis=1)
    sinr = np.zeros_like(p)
    sinr[ok] = link.sinr(p[ok])
    achieved = np.where(link.active, table.cqi_class(np.where(link.active, sinr, 1.0)), 0)
    ok &= np.all(achieved == grid, axis=1) & np.all((sinr >= floor) | ~link.active, axis=1)

    shape = tuple(len(a) for a in axes)
    feasible = ok.reshape(shape)
    maximal = feasible.copy()
    for i in range(3):
        if shape[i] > 1:
            up = np.zeros_like(feasible)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            src[i], dst[i] = slice(1, None), slice(None, -1)
            up[tuple(dst)] = feasible[tuple(src)]
            maximal &= ~up
    keep = np.flatnonzero(maximal.ravel())
    order = keep[np.argsort(p[keep].sum(axis=1), kind="stable")]
    return Frontier(classes=grid[order], powers=p[order], sinrs=sinr[order])


@dataclass(frozen=True)
class BatchResult:
    best_power: np.ndarray  # (S, 3), zeros where infeasible
    best_utility: np.ndarray  # (S,), -inf where infeasible
    evaluations: np.ndarray  # (S,)

    @property
    def feasible(self) -> np.ndarray:
        return self.best_utility > NEG_INF


def pattern_search_batch(
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray],
    upper: np.ndarray,
    active: np.ndarray,
    cfg: OptimizerConfig | None = None,
) -> BatchResult:
    """:func:`pattern_search_maximize` on many boxes ``[0, upper[s]]`` at once.

    ``evaluate(rows, powers)`` scores power vectors for the given box indices, with ``-inf``
    for points that violate a constraint. Every start of every box advances one poll per
    step, so the visited points, evaluation counts and returned optimum (ties included) are
    the same as running the scalar search on each box separately.
    """
    cfg = cfg or OptimizerConfig()
    active = np.asarray(active, bool)
    upper = np.where(active, np.asarray(upper, float), 0.0)
    n = len(upper)
    rows = np.arange(n)
    best_x, best_f = np.zeros((n, 3)), np.full(n, NEG_INF)
    count = np.zeros(n, dtype=int)
    fresh = np.ones(n, bool)

    def consider(x, f):
        better = fresh | (f > best_f)
        best_x[better], best_f[better] = x[better], f[better]
        fresh[:] = False

    starts = []
    for strategy in cfg.multistart_points or ("full_power",):
        if strategy == "coarse_grid":
            levels = np.linspace(0.0, upper, cfg.coarse_levels, axis=1)  # (S, L, 3)
            idx = np.array(list(itertools.product(range(cfg.coarse_levels), repeat=3)))
            pts = levels[:, idx, [0, 1, 2]]  # (S, G, 3) in lexicographic product order
            g = pts.shape[1]
            vals = evaluate(np.repeat(rows, g), pts.reshape(-1, 3)).reshape(n, g)
            # duplicates from inactive axes come after the first copy, so argmax matches the scalar grid
            k = np.argmax(vals, axis=1)
            x, f = pts[rows, k], vals[rows, k]
            count += cfg.coarse_levels ** active.sum(axis=1)
        else:
            x = upper.copy() if strategy == "full_power" else upper / 2.0
            f = evaluate(rows, x)
            count += 1
        consider(x, f)
        starts.append((x, f))

    # one run per (start, box); run r belongs to box r % n
    n_runs = len(starts) * n
    box = np.tile(rows, len(starts))
    x = np.concatenate([s[0] for s in starts])
    f = np.concatenate([s[1] for s in starts])
    movable = active & (upper > 0)
    poll_dim = np.zeros((n, 6), dtype=int)
    n_polls = 2 * movable.sum(axis=1)
    for s in range(n):
        dims = np.flatnonzero(movable[s])
        poll_dim[s, : 2 * len(dims)] = np.repeat(dims, 2)
    mesh = np.full(n_runs, cfg.initial_mesh)
    pidx = np.zeros(n_runs, dtype=int)
    used = np.zeros(n_runs, dtype=int)
    live = np.flatnonzero((n_polls[box] > 0) & (mesh >= cfg.mesh_tolerance))

    while live.size:
        b = box[live]
        dim = poll_dim[b, pidx[live]]
        sign = np.where(pidx[live] % 2 == 0, 1.0, -1.0)
        cand = x[live].copy()
        cand[np.arange(live.size), dim] += sign * mesh[live] * upper[b, dim]
        cand = np.clip(cand, 0.0, upper[b])
        moved = np.any(cand != x[live], axis=1)
        fc = np.full(live.size, NEG_INF)
        if moved.any():
            fc[moved] = evaluate(b[moved], cand[moved])
        used[live] += moved
        up = moved & (fc > f[live])
        r_up, r_no = live[up], live[~up]
        x[r_up], f[r_up] = cand[up], fc[up]
        mesh[r_up] = np.minimum(mesh[r_up] * cfg.mesh_expansion, 1.0)
        pidx[r_up] = 0
        pidx[r_no] += 1
        wrap = r_no[pidx[r_no] == n_polls[box[r_no]]]
        mesh[wrap] *= cfg.mesh_contraction
        pidx[wrap] = 0
        live = live[(mesh[live] >= cfg.mesh_tolerance) & (used[live] < cfg.max_evaluations)]

    for k in range(len(starts)):
        sl = slice(k * n, (k + 1) * n)
        consider(x[sl], f[sl])
    np.add.at(count, box, used)
    feasible = best_f > NEG_INF
    return BatchResult(np.where(feasible[:, None], best_x, 0.0), best_f, count)
