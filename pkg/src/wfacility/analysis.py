"""Empirical harnesses: ratio evaluation, strategyproofness fuzzing,
adversarial search against the closed-form bounds, trade-off sweeps."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numba import njit

from .core import (Instance, OptimalSolverError, Point, approximation_ratio, cost_arrays,
                   utilitarian_cost)
from .instances import (MODES, BoundPair, bound, coa_worst_instance, consistency_bound,
                        is_compatible, robustness_bound)
from .mechanisms import BATCH_MECHANISMS, cmp, phantom_count
from .optimal import geometric_median_grid, geometric_median_iterative, solve_arrays

ACCURATE = "accurate"
PredictionMode = Union[str, Point]

GRID_CHECK_MAX_N = 12
GRID_CHECK_RESOLUTION = 256


def instance_id(instance: Instance) -> str:
    payload = json.dumps([[a.location.x, a.location.y, a.weight] for a in instance.agents])
    return hashlib.sha1(payload.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class RatioReport:
    instance_id: str
    c: float
    prediction_mode: str  # "accurate" or "fixed"
    prediction: Point
    facility: Point
    optimal: Point
    mech_cost: float
    opt_cost: float
    ratio: float

    def as_row(self) -> dict:
        return {
            "instance_id": self.instance_id, "c": self.c,
            "prediction_mode": self.prediction_mode,
            "pred_x": self.prediction.x, "pred_y": self.prediction.y,
            "facility_x": self.facility.x, "facility_y": self.facility.y,
            "opt_x": self.optimal.x, "opt_y": self.optimal.y,
            "mech_cost": self.mech_cost, "opt_cost": self.opt_cost, "ratio": self.ratio,
        }


def evaluate(instance: Instance, c: float, prediction_mode: PredictionMode = ACCURATE,
             cross_check: bool = True) -> RatioReport:
    """Run CMP on ``instance`` and compare its cost with the optimum.

    ``prediction_mode`` is ``"accurate"`` (the prediction is the computed
    optimum) or a fixed :class:`Point`. For n <= 12 the optimum is checked
    against the grid oracle unless ``cross_check`` is off.
    """
    opt = geometric_median_iterative(instance.agents)
    if cross_check and instance.n <= GRID_CHECK_MAX_N:
        grid = geometric_median_grid(instance.agents, 0.5, GRID_CHECK_RESOLUTION)
        if opt.cost > grid.cost + 1e-9:
            raise OptimalSolverError(
                f"optimal solver failed: iterative cost {opt.cost!r} above grid cost {grid.cost!r}")
    if isinstance(prediction_mode, Point):
        mode, pred = "fixed", prediction_mode
    elif prediction_mode == ACCURATE:
        mode, pred = ACCURATE, opt.location
    else:
        raise ValueError(f"unknown prediction mode {prediction_mode!r}")
    f = cmp(instance.agents, pred, c).facility
    mech = utilitarian_cost(f, instance.agents).total_cost
    return RatioReport(instance_id(instance), c, mode, pred, f, opt.location, mech, opt.cost,
                       approximation_ratio(mech, opt.cost))


def tradeoff_sweep(instance: Instance, predictions: Sequence[PredictionMode],
                   c_grid: Sequence[float]) -> list[RatioReport]:
    """Evaluate every (prediction, c) pair; rows ordered prediction-major."""
    if not predictions or not c_grid:
        raise ValueError("prediction list and c grid must be nonempty")
    return [evaluate(instance, c, p) for p in predictions for c in c_grid]


def frontier(c_grid: Sequence[float], weight_ratio_grid: Sequence[float]) -> list[BoundPair]:
    """Both closed-form bounds with W_min = 1, for every (ratio, c) cell."""
    if not c_grid or not weight_ratio_grid:
        raise ValueError("grids must be nonempty")
    rows = []
    for wr in weight_ratio_grid:
        col = [BoundPair.of(c, 1.0, wr) for c in c_grid]
        ordered = sorted(col, key=lambda b: b.c)
        for lo, hi in zip(ordered, ordered[1:]):
            if hi.consistency > lo.consistency + 1e-12 or hi.robustness < lo.robustness - 1e-12:
                raise RuntimeError(f"bound monotonicity violated at ratio {wr}")
        rows.extend(col)
    return rows


# --- strategyproofness fuzzing -------------------------------------------------

BatchMechanism = Callable[[np.ndarray, np.ndarray, Optional[Point], float], np.ndarray]

FUZZ_BOX = 10.0
FUZZ_C = (0.0, 0.25, 0.5, 0.75)


@dataclass
class FuzzReport:
    mechanism: str
    trials: int
    tolerance: float
    violations: list[dict] = field(default_factory=list)
    max_gain: float = 0.0

    def as_dict(self) -> dict:
        return {"mechanism": self.mechanism, "trials": self.trials, "tolerance": self.tolerance,
                "violations": self.violations, "max_gain": self.max_gain}


def fuzz_strategyproofness(mechanism: Union[str, BatchMechanism] = "cmp", trials: int = 10_000,
                           seed: int = 0, tolerance: float = 1e-9,
                           n_max: int = 15) -> FuzzReport:
    """Search for profitable misreports.

    Each trial draws an instance (n in [1, n_max], coordinates in [-10, 10],
    weights in [1, 10], c from {0, .25, .5, .75}, a uniform prediction), picks
    one agent and tries 81 grid misreports plus 32 random ones. Any drop in
    that agent's weighted distance larger than ``tolerance`` is recorded.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if isinstance(mechanism, str):
        name, mech = mechanism, BATCH_MECHANISMS[mechanism]
    else:
        name, mech = getattr(mechanism, "__name__", "custom"), mechanism
    axis = np.linspace(-FUZZ_BOX, FUZZ_BOX, 9)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    report = FuzzReport(name, trials, tolerance)
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        n = int(rng.integers(1, n_max + 1))
        locs = rng.uniform(-FUZZ_BOX, FUZZ_BOX, size=(n, 2))
        ws = rng.uniform(1.0, 10.0, size=n)
        c = float(rng.choice(FUZZ_C))
        pred = Point(*rng.uniform(-FUZZ_BOX, FUZZ_BOX, size=2))
        i = int(rng.integers(n))
        reports = np.vstack([locs[i], grid, rng.uniform(-FUZZ_BOX, FUZZ_BOX, size=(32, 2))])
        profiles = np.repeat(locs[None], reports.shape[0], axis=0)
        profiles[:, i, :] = reports
        fac = mech(profiles, ws, pred, c)
        costs = ws[i] * np.hypot(fac[:, 0] - locs[i, 0], fac[:, 1] - locs[i, 1])
        gains = costs[0] - costs[1:]
        report.max_gain = max(report.max_gain, float(gains.max()))
        for k in np.flatnonzero(gains > tolerance):
            report.violations.append({
                "n": n, "c": c, "prediction": [pred.x, pred.y],
                "agents": [[float(x), float(y), float(w)] for (x, y), w in zip(locs, ws)],
                "agent_index": i, "misreport": [float(v) for v in reports[k + 1]],
                "gain": float(gains[k]),
            })
    return report


# --- adversarial search ----------------------------------------------------------

@dataclass(frozen=True)
class SearchConfig:
    seed: int
    c: float
    mode: str = "consistency"
    restarts: int = 10
    steps_per_restart: int = 2000
    n_range: tuple[int, int] = (1, 16)
    coordinate_box: tuple[float, float] = (-10.0, 10.0)
    weight_box: tuple[float, float] = (1.0, 1.0)
    seed_with_coa: bool = True
    integral_only: bool = True  # keep n where c*n is an integer

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if not (0.0 <= self.c < 1.0):
            raise ValueError("invalid confidence")
        lo, hi = self.n_range
        if not (1 <= lo <= hi):
            raise ValueError("empty n_range")
        if not self.coordinate_box[0] < self.coordinate_box[1]:
            raise ValueError("empty coordinate box")
        if not (0.0 < self.weight_box[0] <= self.weight_box[1]):
            raise ValueError("weight box must lie in (0, inf) and be nonempty")
        if self.restarts < 1 or self.steps_per_restart < 0:
            raise ValueError("restarts must be >= 1 and steps >= 0")
        if not self.allowed_n():
            raise ValueError("no admissible n in n_range for this c")

    def allowed_n(self) -> list[int]:
        lo, hi = self.n_range
        ns = range(lo, hi + 1)
        if self.integral_only:
            return [n for n in ns if abs(self.c * n - round(self.c * n)) < 1e-9
                    and math.floor(self.c * n) == round(self.c * n)]
        return list(ns)


@dataclass(frozen=True)
class SearchResult:
    instance: Instance
    report: RatioReport
    bound: float          # bound for the best instance's own weights
    max_excess: float     # max over every evaluated instance of ratio - own bound
    evaluations: int


@njit(cache=True)
def _cmp_point(xs, ys, px, py, m):
    n = xs.shape[0]
    ax = np.empty(n + m)
    ay = np.empty(n + m)
    ax[:n] = xs
    ay[:n] = ys
    ax[n:] = px
    ay[n:] = py
    ax.sort()
    ay.sort()
    k = (n + m - 1) // 2
    return ax[k], ay[k]


def _ratio(xs, ys, ws, pred, c, accurate):
    opt = solve_arrays(xs, ys, ws)
    px, py = (opt.location.x, opt.location.y) if accurate else pred
    fx, fy = _cmp_point(xs, ys, px, py, phantom_count(xs.shape[0], c))
    return approximation_ratio(cost_arrays(fx, fy, xs, ys, ws), opt.cost)


def _own_bound(ws, c, mode):
    return bound(c, float(ws.min()), float(ws.max()), mode)


def _restart(cfg: SearchConfig, child: np.random.SeedSequence, seeded: Optional[Instance]):
    rng = np.random.default_rng(child)
    lo, hi = cfg.coordinate_box
    wlo, whi = cfg.weight_box
    accurate = cfg.mode == "consistency"
    if seeded is not None:
        xs, ys, ws = seeded.arrays()
        pred = np.array([0.0, 0.0])
    else:
        n = int(rng.choice(cfg.allowed_n()))
        xs = rng.uniform(lo, hi, n)
        ys = rng.uniform(lo, hi, n)
        ws = rng.uniform(wlo, whi, n)
        pred = rng.uniform(lo, hi, 2)
    n = xs.shape[0]
    cur = _ratio(xs, ys, ws, pred, cfg.c, accurate)
    max_excess = cur - _own_bound(ws, cfg.c, cfg.mode)
    width = hi - lo
    radius = 0.1 * width
    streak = 0
    # coordinates that may move: agent x, agent y, weights (if the box is open), prediction
    kinds = ["x", "y"] + (["w"] if whi > wlo else []) + (["p"] if not accurate else [])
    for _ in range(cfg.steps_per_restart):
        kind = kinds[int(rng.integers(len(kinds)))]
        nx, ny, nw, npred = xs, ys, ws, pred
        delta = rng.uniform(-radius, radius)
        if kind == "p":
            npred = pred.copy()
            j = int(rng.integers(2))
            npred[j] = min(max(npred[j] + delta, lo), hi)
        else:
            i = int(rng.integers(n))
            if kind == "x":
                nx = xs.copy()
                nx[i] = min(max(nx[i] + delta, lo), hi)
            elif kind == "y":
                ny = ys.copy()
                ny[i] = min(max(ny[i] + delta, lo), hi)
            else:
                nw = ws.copy()
                nw[i] = min(max(nw[i] + delta * (whi - wlo) / width, wlo), whi)
        r = _ratio(nx, ny, nw, npred, cfg.c, accurate)
        max_excess = max(max_excess, r - _own_bound(nw, cfg.c, cfg.mode))
        if r >= cur:
            xs, ys, ws, pred, cur = nx, ny, nw, npred, r
            streak = 0
        else:
            streak += 1
            if streak >= 20:
                radius = max(radius / 2, 1e-6 * width)
                streak = 0
    return xs, ys, ws, pred, cur, max_excess


def _seed_instance(cfg: SearchConfig) -> Optional[Instance]:
    wlo, whi = cfg.weight_box
    lo, hi = cfg.coordinate_box
    for n in cfg.allowed_n():
        if is_compatible(n, cfg.c):
            coa = coa_worst_instance(n, cfg.c, wlo, whi, cfg.mode)
            if lo <= -coa.worst_x and coa.worst_x <= hi and lo <= 0 and 1 <= hi:
                return coa.instance
    return None


def adversarial_search(cfg: SearchConfig) -> SearchResult:
    """Random-restart hill climbing on the CMP approximation ratio.

    Consistency mode uses the computed optimum as the prediction; robustness
    mode also moves the prediction. When ``seed_with_coa`` is set and a COA
    instance fits the configuration, restart 0 starts from it. Deterministic
    given ``cfg.seed``.
    """
    seeded = _seed_instance(cfg) if cfg.seed_with_coa else None
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    best = None
    max_excess = -math.inf
    for k, child in enumerate(children):
        out = _restart(cfg, child, seeded if k == 0 else None)
        max_excess = max(max_excess, out[5])
        if best is None or out[4] > best[4]:
            best = out
    xs, ys, ws, pred, _, _ = best
    accurate = cfg.mode == "consistency"
    inst = Instance.from_arrays(xs, ys, ws, None if accurate else Point(*pred), cfg.c)
    report = evaluate(inst, cfg.c, ACCURATE if accurate else Point(*pred), cross_check=False)
    evaluations = cfg.restarts * (cfg.steps_per_restart + 1)
    return SearchResult(inst, report, _own_bound(ws, cfg.c, cfg.mode), max_excess, evaluations)


__all__ = [
    "ACCURATE", "RatioReport", "evaluate", "tradeoff_sweep", "frontier", "FuzzReport",
    "fuzz_strategyproofness", "SearchConfig", "SearchResult", "adversarial_search",
    "instance_id", "consistency_bound", "robustness_bound",
]
