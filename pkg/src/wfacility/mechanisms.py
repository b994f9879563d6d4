"""Coordinate-median mechanisms: CM, GCM (phantom points) and CMP.

None of these look at agent weights when placing the facility, which is what
keeps them strategyproof in the weighted setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Agent, EmptyInstanceError, Point, lower_median


@dataclass(frozen=True)
class MechanismOutput:
    facility: Point
    phantom_count: int
    augmented_size: int


def phantom_count(n: int, c: float) -> int:
    """Number of prediction copies CMP adds: floor(c * n)."""
    return math.floor(c * n)


def _check_confidence(c: float) -> None:
    if not (0.0 <= c < 1.0):
        raise ValueError(f"invalid confidence {c}; need 0 <= c < 1")


def gcm(agents: Sequence[Agent], phantoms: Sequence[Point] = ()) -> MechanismOutput:
    if len(agents) == 0:
        raise EmptyInstanceError("empty instance")
    points = [a.location for a in agents] + list(phantoms)
    f = Point(lower_median(p.x for p in points), lower_median(p.y for p in points))
    return MechanismOutput(f, len(phantoms), len(points))


def cm(agents: Sequence[Agent]) -> MechanismOutput:
    return gcm(agents, ())


def cmp(agents: Sequence[Agent], prediction: Point, c: float) -> MechanismOutput:
    """Coordinate median with ``floor(c*n)`` phantom copies of ``prediction``."""
    _check_confidence(c)
    m = phantom_count(len(agents), c)
    return gcm(agents, [prediction] * m)


# Batched forms. ``locs`` has shape (k, n, 2): k alternative report profiles
# of the same n agents. They return (k, 2) facilities.

def batch_gcm(locs: np.ndarray, phantoms: np.ndarray) -> np.ndarray:
    k = locs.shape[0]
    if phantoms.size:
        tiled = np.broadcast_to(phantoms, (k,) + phantoms.shape)
        locs = np.concatenate([locs, tiled], axis=1)
    total = locs.shape[1]
    return np.sort(locs, axis=1)[:, (total - 1) // 2, :]


def batch_cmp(locs: np.ndarray, weights: np.ndarray, prediction: Point | None,
              c: float) -> np.ndarray:
    _check_confidence(c)
    m = phantom_count(locs.shape[1], c)
    if m and prediction is None:
        raise ValueError("prediction required when c > 0")
    ph = np.tile([prediction.x, prediction.y], (m, 1)) if m else np.empty((0, 2))
    return batch_gcm(locs, ph)


def batch_weighted_mean(locs: np.ndarray, weights: np.ndarray, prediction: Point | None,
                        c: float) -> np.ndarray:
    """Weighted centroid of the reports. Not strategyproof; a foil for the fuzzer."""
    return np.einsum("kni,n->ki", locs, weights) / weights.sum()


BATCH_MECHANISMS = {
    "cmp": batch_cmp,
    "weighted_mean": batch_weighted_mean,
}
