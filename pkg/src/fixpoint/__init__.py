"""Fixed-point iteration schemes for contractive-like operators on boxes in R^d.

Certified operators, the new multistep / S-iteration / Thianwan / SP schemes,
data-dependence experiments and a config-driven CLI (``fixpoint``).
"""

from .analysis import RunConfig, StopRule, data_dependence_experiment, run
from .operators import ContractParams, Gauge, OperatorSpec, affine, counterexample_operator, evaluate, perturb
from .schemes import Schedule, Scheme, SchemeConfig, step
from .space import BoxDomain, Norm, point

__all__ = [
    "BoxDomain", "ContractParams", "Gauge", "Norm", "OperatorSpec", "RunConfig", "Schedule", "Scheme",
    "SchemeConfig", "StopRule", "affine", "counterexample_operator", "data_dependence_experiment", "evaluate",
    "perturb", "point", "run", "step",
]
