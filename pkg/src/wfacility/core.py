"""Domain types and the cost primitives shared by every mechanism."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_EPSILON = 1e-9


class EmptyInstanceError(ValueError):
    pass


class OptimalSolverError(RuntimeError):
    """Raised when a supposedly optimal cost beats the mechanism by more than epsilon."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Agent:
    location: Point
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValueError(f"agent weight must be positive and finite, got {self.weight}")


def agent(x: float, y: float, w: float = 1.0) -> Agent:
    return Agent(Point(float(x), float(y)), float(w))


@dataclass(frozen=True)
class Instance:
    """A multiset of agents plus an optional prediction and confidence."""

    agents: tuple[Agent, ...]
    prediction: Optional[Point] = None
    confidence: Optional[float] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(self.agents))
        if not self.agents:
            raise EmptyInstanceError("empty instance")
        if self.confidence is not None and not (0.0 <= self.confidence < 1.0):
            raise ValueError(f"invalid confidence {self.confidence}; need 0 <= c < 1")

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def w_min(self) -> float:
        return min(a.weight for a in self.agents)

    @property
    def w_max(self) -> float:
        return max(a.weight for a in self.agents)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (xs, ys, ws) as float64 arrays."""
        xs = np.array([a.location.x for a in self.agents], dtype=np.float64)
        ys = np.array([a.location.y for a in self.agents], dtype=np.float64)
        ws = np.array([a.weight for a in self.agents], dtype=np.float64)
        return xs, ys, ws

    @classmethod
    def from_arrays(cls, xs, ys, ws, prediction: Optional[Point] = None,
                    confidence: Optional[float] = None) -> "Instance":
        agents = tuple(agent(x, y, w) for x, y, w in zip(xs, ys, ws))
        return cls(agents, prediction, confidence)


@dataclass(frozen=True)
class CostReport:
    facility: Point
    total_cost: float
    per_agent: list[float] = field(default_factory=list)


def euclidean_distance(a: Point, b: Point) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def individual_cost(f: Point, agent: Agent) -> float:
    return agent.weight * euclidean_distance(f, agent.location)


def utilitarian_cost(f: Point, agents: Sequence[Agent]) -> CostReport:
    """Average weighted distance from the agents to ``f``."""
    if len(agents) == 0:
        raise EmptyInstanceError("empty instance")
    per_agent = [individual_cost(f, a) for a in agents]
    return CostReport(f, math.fsum(per_agent) / len(per_agent), per_agent)


def cost_arrays(fx: float, fy: float, xs: np.ndarray, ys: np.ndarray, ws: np.ndarray) -> float:
    """Array form of the utilitarian cost; used on hot paths."""
    return float(np.sum(ws * np.hypot(xs - fx, ys - fy)) / xs.shape[0])


def lower_median(values: Iterable[float]) -> float:
    """Middle order statistic; for an even count the smaller of the two middles."""
    vals = sorted(values)
    if not vals:
        raise ValueError("median of empty list")
    return vals[(len(vals) - 1) // 2]


def approximation_ratio(mech_cost: float, opt_cost: float,
                        epsilon: float = DEFAULT_EPSILON) -> float:
    if mech_cost < opt_cost - epsilon:
        raise OptimalSolverError(
            f"optimal solver failed: mechanism cost {mech_cost!r} < optimal cost {opt_cost!r}")
    if opt_cost < epsilon:
        return 1.0
    return mech_cost / opt_cost
