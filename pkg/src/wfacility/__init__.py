"""Prediction-augmented strategyproof mechanisms for weighted single-facility location."""

__version__ = "0.1.0"

from .core import (Agent, CostReport, Instance, Point, agent, approximation_ratio,
                   euclidean_distance, individual_cost, lower_median, utilitarian_cost)
from .mechanisms import MechanismOutput, cm, cmp, gcm
from .optimal import (OptimalResult, SolverConfig, geometric_median_grid,
                      geometric_median_iterative)
from .instances import (BoundPair, CoaInstance, coa_ratio, coa_worst_instance,
                        consistency_bound, impossibility_instances, impossibility_ratio,
                        robustness_bound)
