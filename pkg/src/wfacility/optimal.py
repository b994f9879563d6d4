"""Optimal facility location: the weighted geometric median.

Two independent routes are provided. ``geometric_median_iterative`` is the
production solver (anchor test, then Weiszfeld iterations with a guarded
Newton step). ``geometric_median_grid`` exhaustively scans a grid and is only
meant as an oracle for the iterative solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .core import Agent, EmptyInstanceError, Point, cost_arrays


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 10_000
    anchor_epsilon: float = 1e-12

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.anchor_epsilon > 0:
            raise ValueError("anchor_epsilon must be positive")


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class OptimalResult:
    location: Point
    cost: float
    iterations: int
    converged: bool
    anchored: bool = False  # location is an agent point certified by the anchor test
    cell_diagonal: float = 0.0  # grid oracle only


@njit(cache=True)
def _anchor_residual(xs, ys, ws, j):
    # weight stacked on p_j and the pull of every other location on it
    wj = 0.0
    rx = 0.0
    ry = 0.0
    for i in range(xs.shape[0]):
        dx = xs[i] - xs[j]
        dy = ys[i] - ys[j]
        d = math.sqrt(dx * dx + dy * dy)
        if d == 0.0:
            wj += ws[i]
        else:
            rx += ws[i] * dx / d
            ry += ws[i] * dy / d
    return wj, rx, ry


@njit(cache=True)
def _sum_cost(x, y, xs, ys, ws):
    s = 0.0
    for i in range(xs.shape[0]):
        s += ws[i] * math.sqrt((x - xs[i]) ** 2 + (y - ys[i]) ** 2)
    return s


@njit(cache=True)
def _grad_norm(x, y, xs, ys, ws):
    gx = 0.0
    gy = 0.0
    for i in range(xs.shape[0]):
        dx = x - xs[i]
        dy = y - ys[i]
        d = math.sqrt(dx * dx + dy * dy)
        if d == 0.0:
            return np.inf
        gx += ws[i] * dx / d
        gy += ws[i] * dy / d
    return math.sqrt(gx * gx + gy * gy)


@njit(cache=True)
def _solve(xs, ys, ws, tol, max_iter, anchor_eps):
    """Return (x, y, iterations, converged, anchor_index or -1)."""
    n = xs.shape[0]

    best_j = -1
    best_cost = np.inf
    for j in range(n):
        wj, rx, ry = _anchor_residual(xs, ys, ws, j)
        if math.sqrt(rx * rx + ry * ry) <= wj + tol:
            c = _sum_cost(xs[j], ys[j], xs, ys, ws)
            if c < best_cost:
                best_cost = c
                best_j = j
    if best_j >= 0:
        return xs[best_j], ys[best_j], 0, True, best_j

    wsum = 0.0
    x = 0.0
    y = 0.0
    for i in range(n):
        wsum += ws[i]
        x += ws[i] * xs[i]
        y += ws[i] * ys[i]
    x /= wsum
    y /= wsum

    polish = 2
    for it in range(1, max_iter + 1):
        # an iterate sitting on an agent point: step off along the residual pull
        near = -1
        for i in range(n):
            if math.sqrt((x - xs[i]) ** 2 + (y - ys[i]) ** 2) < anchor_eps:
                near = i
                break
        if near >= 0:
            wj, rx, ry = _anchor_residual(xs, ys, ws, near)
            r = math.sqrt(rx * rx + ry * ry)
            denom = 0.0
            for i in range(n):
                d = math.sqrt((xs[i] - xs[near]) ** 2 + (ys[i] - ys[near]) ** 2)
                if d > 0.0:
                    denom += ws[i] / d
            step = max(r - wj, 0.0) / denom
            if step < anchor_eps:
                step = anchor_eps
            x = xs[near] + step * rx / r
            y = ys[near] + step * ry / r
            continue

        gx = 0.0
        gy = 0.0
        hxx = 0.0
        hxy = 0.0
        hyy = 0.0
        sw = 0.0
        tx = 0.0
        ty = 0.0
        for i in range(n):
            dx = x - xs[i]
            dy = y - ys[i]
            d = math.sqrt(dx * dx + dy * dy)
            ux = dx / d
            uy = dy / d
            gx += ws[i] * ux
            gy += ws[i] * uy
            k = ws[i] / d
            hxx += k * (1.0 - ux * ux)
            hxy -= k * ux * uy
            hyy += k * (1.0 - uy * uy)
            sw += k
            tx += k * xs[i]
            ty += k * ys[i]
        gnorm = math.sqrt(gx * gx + gy * gy)
        if gnorm <= tol:
            # a few extra Newton steps push well below tol; keep one only if it helps
            det = hxx * hyy - hxy * hxy
            if polish == 0 or det <= 1e-300:
                return x, y, it, True, -1
            polish -= 1
            nx = x - (hyy * gx - hxy * gy) / det
            ny = y - (hxx * gy - hxy * gx) / det
            if _grad_norm(nx, ny, xs, ys, ws) < gnorm:
                x = nx
                y = ny
                continue
            return x, y, it, True, -1

        wx = tx / sw
        wy = ty / sw
        cw = _sum_cost(wx, wy, xs, ys, ws)
        det = hxx * hyy - hxy * hxy
        if det > 1e-300:
            nx = x - (hyy * gx - hxy * gy) / det
            ny = y - (hxx * gy - hxy * gx) / det
            if _sum_cost(nx, ny, xs, ys, ws) <= cw:
                x = nx
                y = ny
                continue
        x = wx
        y = wy
    return x, y, max_iter, False, -1


def _as_arrays(agents: Sequence[Agent]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(agents) == 0:
        raise EmptyInstanceError("empty instance")
    xs = np.array([a.location.x for a in agents], dtype=np.float64)
    ys = np.array([a.location.y for a in agents], dtype=np.float64)
    ws = np.array([a.weight for a in agents], dtype=np.float64)
    return xs, ys, ws


def solve_arrays(xs: np.ndarray, ys: np.ndarray, ws: np.ndarray,
                 config: SolverConfig = DEFAULT_CONFIG) -> OptimalResult:
    """Iterative solver on raw float64 arrays (no Agent objects)."""
    if xs.shape[0] == 0:
        raise EmptyInstanceError("empty instance")
    x, y, its, ok, j = _solve(xs, ys, ws, config.tolerance, config.max_iterations,
                              config.anchor_epsilon)
    return OptimalResult(Point(float(x), float(y)), cost_arrays(x, y, xs, ys, ws),
                         int(its), bool(ok), anchored=j >= 0)


def geometric_median_iterative(agents: Sequence[Agent],
                               config: SolverConfig = DEFAULT_CONFIG) -> OptimalResult:
    """Weighted geometric median of the agents' locations.

    Every agent location is first tested as a candidate: if the combined pull
    of the other agents does not exceed the weight stacked there, the point is
    optimal and returned exactly. Otherwise iterate from the weighted centroid
    until the gradient norm drops to ``config.tolerance``. Non-convergence is
    reported through ``converged`` rather than raised.
    """
    return solve_arrays(*_as_arrays(agents), config=config)


def gradient_norm(f: Point, agents: Sequence[Agent]) -> float:
    """Norm of the gradient of the (unaveraged) weighted distance sum at ``f``."""
    xs, ys, ws = _as_arrays(agents)
    dx = f.x - xs
    dy = f.y - ys
    d = np.hypot(dx, dy)
    if np.any(d == 0.0):
        raise ValueError("gradient undefined at an agent location")
    return float(math.hypot(np.sum(ws * dx / d), np.sum(ws * dy / d)))


def geometric_median_grid(agents: Sequence[Agent], bounding_margin: float = 0.5,
                          resolution: int = 256) -> OptimalResult:
    """Brute-force minimizer over a ``resolution`` x ``resolution`` grid.

    The grid spans the agents' bounding box grown by ``bounding_margin`` on
    every side. ``cell_diagonal`` on the result is the diagonal of one cell;
    the true optimum is within half of it of some grid node.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    xs, ys, ws = _as_arrays(agents)
    gx = np.linspace(xs.min() - bounding_margin, xs.max() + bounding_margin, resolution)
    gy = np.linspace(ys.min() - bounding_margin, ys.max() + bounding_margin, resolution)
    total = np.zeros((resolution, resolution))
    for x, y, w in zip(xs, ys, ws):
        total += w * np.hypot(gx[:, None] - x, gy[None, :] - y)
    total /= xs.shape[0]
    i, j = np.unravel_index(int(np.argmin(total)), total.shape)
    diag = math.hypot(gx[1] - gx[0], gy[1] - gy[0])
    fx, fy = float(gx[i]), float(gy[j])
    return OptimalResult(Point(fx, fy), cost_arrays(fx, fy, xs, ys, ws),
                         resolution * resolution, True, cell_diagonal=diag)
