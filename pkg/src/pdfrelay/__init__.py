"""Partial decode-forward achievable rates for relay networks.

Discrete memoryless networks are evaluated exactly from their coding
distribution; the Gaussian two-level network has closed-form terms, a
log-determinant oracle and a power-allocation optimizer.
"""
from .errors import (
    ConfigError,
    NumericalConsistencyError,
    PreconditionError,
    ProjectionError,
    RelayRateError,
    ResourceError,
    StructuralError,
    ValidationError,
)
from .gaussian import (
    CorollaryTerms,
    GaussianTwoLevel,
    PowerAllocation,
    corollary_rate,
    corollary_terms,
    cutset_upper_bound,
    oracle_terms,
)
from .network import CodingDistribution, DmRelayNetwork, assemble_joint, uniform_distribution
from .optimizer import OptimizerConfig, SweepSpec, maximize_min_rate, project_to_power, sweep
from .probtable import Factor, JointPmf, VariableId, cond_mutual_info, entropy
from .rates import best_over_permutations, constraint_set, lp_rate, rate_split_lp, theorem_rate

__version__ = "0.1.0"

__all__ = [
    "CodingDistribution",
    "ConfigError",
    "CorollaryTerms",
    "DmRelayNetwork",
    "Factor",
    "GaussianTwoLevel",
    "JointPmf",
    "NumericalConsistencyError",
    "OptimizerConfig",
    "PowerAllocation",
    "PreconditionError",
    "ProjectionError",
    "RelayRateError",
    "ResourceError",
    "StructuralError",
    "SweepSpec",
    "ValidationError",
    "VariableId",
    "assemble_joint",
    "best_over_permutations",
    "cond_mutual_info",
    "constraint_set",
    "corollary_rate",
    "corollary_terms",
    "cutset_upper_bound",
    "entropy",
    "lp_rate",
    "maximize_min_rate",
    "oracle_terms",
    "project_to_power",
    "rate_split_lp",
    "sweep",
    "theorem_rate",
    "uniform_distribution",
]
