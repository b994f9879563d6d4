"""Closed-form bounds, worst-case instance generators and family checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from .core import Agent, Instance, Point, agent, approximation_ratio, utilitarian_cost
from .mechanisms import cmp, gcm
from .optimal import geometric_median_iterative

Mode = Literal["consistency", "robustness"]
MODES = ("consistency", "robustness")

_INT_TOL = 1e-9
_OPT_TOL = 1e-7
ORIGIN = Point(0.0, 0.0)
TOP = Point(0.0, 1.0)


def _check_bound_args(c: float, w_min: float, w_max: float) -> None:
    if not (0.0 <= c < 1.0):
        raise ValueError(f"invalid confidence {c}; need 0 <= c < 1")
    if not (0.0 < w_min <= w_max) or not math.isfinite(w_max):
        raise ValueError(f"need 0 < w_min <= w_max, got w_min={w_min}, w_max={w_max}")


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def consistency_bound(c: float, w_min: float, w_max: float) -> float:
    _check_bound_args(c, w_min, w_max)
    a = (1 + c) * w_min
    b = (1 - c) * w_max
    return math.hypot(a, b) / a


def robustness_bound(c: float, w_min: float, w_max: float) -> float:
    _check_bound_args(c, w_min, w_max)
    a = (1 - c) * w_min
    b = (1 + c) * w_max
    return math.hypot(a, b) / a


def bound(c: float, w_min: float, w_max: float, mode: str) -> float:
    _check_mode(mode)
    if mode == "consistency":
        return consistency_bound(c, w_min, w_max)
    return robustness_bound(c, w_min, w_max)


@dataclass(frozen=True)
class BoundPair:
    c: float
    w_min: float
    w_max: float
    consistency: float
    robustness: float

    @classmethod
    def of(cls, c: float, w_min: float, w_max: float) -> "BoundPair":
        return cls(c, w_min, w_max, consistency_bound(c, w_min, w_max),
                   robustness_bound(c, w_min, w_max))


def _signed_c(c: float, mode: str) -> float:
    # robustness is the consistency expression with c replaced by -c
    _check_mode(mode)
    return c if mode == "consistency" else -c


def worst_x(c: float, w_min: float, w_max: float, mode: str) -> float:
    """Horizontal offset of the side clusters that maximizes the COA ratio."""
    _check_bound_args(c, w_min, w_max)
    s = _signed_c(c, mode)
    return (1 + s) * w_min / ((1 - s) * w_max)


def coa_ratio(x, c: float, w_min: float, w_max: float, mode: str):
    """Approximation ratio of a weighted COA instance as a function of the offset ``x``.

    Accepts a scalar or an array of offsets.
    """
    s = _signed_c(c, mode)
    x = np.asarray(x, dtype=np.float64)
    r = ((1 + s) * x * w_min + (1 - s) * w_max) / ((1 + s) * w_min * np.sqrt(1 + x * x))
    return float(r) if r.ndim == 0 else r


def _near_int(v: float) -> bool:
    return abs(v - round(v)) < _INT_TOL


def is_compatible(n: int, c: float) -> bool:
    """True when every COA group size and the phantom count are integers for this n."""
    if n < 1:
        return False
    sizes = ((1 - c) * n / 2, (1 + c) * n / 2, (1 - c) * n / 4, (1 + c) * n / 4, c * n)
    if not all(_near_int(v) for v in sizes):
        return False
    # the mechanism floors c*n; a product like 0.29*100 floors one short
    return math.floor(c * n) == round(c * n)


def smallest_compatible_n(c: float, limit: int = 100_000) -> int:
    for n in range(1, limit + 1):
        if is_compatible(n, c):
            return n
    raise ValueError(f"no compatible n <= {limit} for c={c}")


@dataclass(frozen=True)
class CoaInstance:
    instance: Instance
    worst_x: float
    mode: str
    expected_ratio: float


def coa_worst_instance(n: int, c: float, w_min: float, w_max: float,
                       mode: str) -> CoaInstance:
    """Weighted clusters-and-opt-on-axes instance on which CMP attains the bound.

    Consistency: (1-c)n/2 heavy agents at (0,1), (1+c)n/4 light agents at each
    of (+-x*,0), accurate prediction (0,1). Robustness: (1+c)n/2 heavy agents at
    (0,1), (1-c)n/4 light agents per side, prediction (0,0).
    """
    _check_bound_args(c, w_min, w_max)
    _check_mode(mode)
    if not is_compatible(n, c):
        raise ValueError(f"n incompatible with c: n={n}, c={c}")
    s = _signed_c(c, mode)
    top = round((1 - s) * n / 2)
    side = round((1 + s) * n / 4)
    x = worst_x(c, w_min, w_max, mode)
    agents = ([agent(0.0, 1.0, w_max)] * top + [agent(x, 0.0, w_min)] * side
              + [agent(-x, 0.0, w_min)] * side)
    prediction = TOP if mode == "consistency" else ORIGIN
    inst = Instance(tuple(agents), prediction, c)
    return CoaInstance(inst, x, mode, bound(c, w_min, w_max, mode))


def instance_ratio(instance: Instance, c: Optional[float] = None) -> float:
    """Ratio of CMP (with the instance's own prediction) against the optimal cost."""
    c = instance.confidence if c is None else c
    pred = instance.prediction
    opt = geometric_median_iterative(instance.agents)
    if pred is None:
        pred = opt.location
    f = cmp(instance.agents, pred, c or 0.0).facility
    return approximation_ratio(utilitarian_cost(f, instance.agents).total_cost, opt.cost)


def extremize_coa_weights(coa: CoaInstance, samples: int = 5) -> bool:
    """Check that moving any one agent's weight strictly inside (w_min, w_max) lowers the ratio.

    Each agent is tried at ``samples`` evenly spaced interior weights. Returns
    True vacuously when w_min == w_max.
    """
    inst = coa.instance
    lo, hi = inst.w_min, inst.w_max
    if hi <= lo:
        return True
    base = instance_ratio(inst)
    interior = np.linspace(lo, hi, samples + 2)[1:-1]
    agents = list(inst.agents)
    for i, a in enumerate(agents):
        for w in interior:
            changed = agents.copy()
            changed[i] = Agent(a.location, float(w))
            r = instance_ratio(Instance(tuple(changed), inst.prediction, inst.confidence))
            if not r < base:
                return False
    return True


def _same(p: Point, q: Point, tol: float = _OPT_TOL) -> bool:
    return abs(p.x - q.x) <= tol and abs(p.y - q.y) <= tol


def _resolve_prediction(instance: Instance, opt: Point) -> Point:
    return instance.prediction if instance.prediction is not None else opt


def _cmp_at_origin(agents: Sequence[Agent], pred: Point, c: float) -> bool:
    return cmp(agents, pred, c).facility == ORIGIN


def is_coa_instance(instance: Instance, c: float) -> bool:
    """Membership in the weighted COA family.

    Agents sit only at (0,1) and (+-x,0) for one x >= 0, agents at (0,1) carry
    the instance's largest weight and axis agents its smallest, CMP outputs
    the origin and the optimum is (0,1). A missing prediction means accurate.
    """
    xs = {abs(a.location.x) for a in instance.agents if a.location != TOP}
    if len(xs) > 1:
        return False
    for a in instance.agents:
        if a.location != TOP and a.location.y != 0.0:
            return False
    w_hi, w_lo = instance.w_max, instance.w_min
    for a in instance.agents:
        expected = w_hi if a.location == TOP else w_lo
        if a.weight != expected:
            return False
    opt = geometric_median_iterative(instance.agents).location
    if not _same(opt, TOP):
        return False
    return _cmp_at_origin(instance.agents, _resolve_prediction(instance, opt), c)


def is_oa_instance(instance: Instance, c: float) -> bool:
    """Optimal-on-axis family: CMP at the origin, optimum on the +y axis, all agents on axes."""
    opt = geometric_median_iterative(instance.agents).location
    if not _cmp_at_origin(instance.agents, _resolve_prediction(instance, opt), c):
        return False
    if not (abs(opt.x) <= _OPT_TOL and opt.y > _OPT_TOL):
        return False
    return all(a.location.x == 0.0 or a.location.y == 0.0 for a in instance.agents)


CA_EPSILONS = tuple(k / 10 for k in range(1, 11))


def is_ca_instance(instance: Instance, c: float,
                   epsilons: Sequence[float] = CA_EPSILONS) -> bool:
    """Clusters-on-axes family check.

    The "no move towards the optimum" condition is only checked on the
    sampled ``epsilons``; agents already at the optimum are skipped since
    moving them toward it is the identity. The prediction is held fixed
    while agents move.
    """
    agents = instance.agents
    opt = geometric_median_iterative(agents).location
    pred = _resolve_prediction(instance, opt)
    if not _cmp_at_origin(agents, pred, c):
        return False
    if not (opt.y >= opt.x > _OPT_TOL):
        return False

    for i, a in enumerate(agents):
        if _same(a.location, opt):
            continue
        for eps in epsilons:
            moved = Point(a.location.x + eps * (opt.x - a.location.x),
                          a.location.y + eps * (opt.y - a.location.y))
            trial = list(agents)
            trial[i] = Agent(moved, a.weight)
            if cmp(trial, pred, c).facility == ORIGIN:
                return False

    left, right, down, up = set(), set(), set(), set()
    n_left = n_right = n_down = n_up = n_opt = 0
    for a in agents:
        p = a.location
        if _same(p, opt):
            n_opt += 1
        elif p.y == 0.0 and p.x < 0:
            left.add(-p.x)
            n_left += 1
        elif p.y == 0.0 and p.x > 0:
            right.add(p.x)
            n_right += 1
        elif p.x == 0.0 and p.y < 0:
            down.add(-p.y)
            n_down += 1
        elif p.x == 0.0 and p.y > 0:
            up.add(p.y)
            n_up += 1
        elif p == ORIGIN:
            # (0,0) is the degenerate cluster x1 = 0 / y1 = 0; count it on the left
            left.add(0.0)
            n_left += 1
        else:
            return False
    if max(len(left), len(right), len(down), len(up)) > 1:
        return False
    if not (n_left < n_right + n_opt and n_down < n_up + n_opt):
        return False
    tol = 1e-6
    if left and right:
        x1, x2 = next(iter(left)), next(iter(right))
        if abs((opt.x + x1) - (x2 - opt.x)) > tol:
            return False
    if down and up:
        y1, y2 = next(iter(down)), next(iter(up))
        if abs((opt.y + y1) - (y2 - opt.y)) > tol:
            return False
    return True


def impossibility_instances() -> tuple[Instance, Instance]:
    """The two collinear instances that rule out 1-consistency with bounded robustness.

    A: four weight-1 agents at (0,10) and one weight-5 agent at (0,20).
    B: the same locations with the weights swapped.
    """
    a = Instance(tuple([agent(0, 10, 1)] * 4 + [agent(0, 20, 5)]))
    b = Instance(tuple([agent(0, 10, 5)] * 4 + [agent(0, 20, 1)]))
    return a, b


def constant_point_ratio(instance: Instance, phantoms: Sequence[Point]) -> float:
    """Ratio of the GCM with the given constant points on ``instance``."""
    f = gcm(instance.agents, phantoms).facility
    opt = geometric_median_iterative(instance.agents)
    return approximation_ratio(utilitarian_cost(f, instance.agents).total_cost, opt.cost)


def impossibility_family(n: int, w_min: float, w_max: float,
                         phantom_y: float = 21.0) -> tuple[Instance, list[Point]]:
    """Generalized instance B: n-1 heavy agents at (0,10), one light agent at (0,20).

    Returned with the n-1 constant points at height ``phantom_y`` that a
    1-consistent GCM must use (above 20), so the GCM outputs (0,20).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    inst = Instance(tuple([agent(0, 10, w_max)] * (n - 1) + [agent(0, 20, w_min)]))
    return inst, [Point(0.0, phantom_y)] * (n - 1)


def impossibility_ratio(n: int, w_min: float, w_max: float) -> float:
    if n < 2:
        raise ValueError("n must be >= 2")
    if not (0 < w_min <= w_max):
        raise ValueError("need 0 < w_min <= w_max")
    return (n - 1) * w_max / w_min
