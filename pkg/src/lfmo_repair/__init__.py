"""Reliability and repair-policy analysis for systems with LFMO component lifetimes.

Component lifetimes are driven by one Lévy subordinator through its Laplace
exponent ``Psi``.  The package computes exact system signatures, the embedded
failed-count chain, closed-form r-out-of-n:R repair-policy metrics, a
full-state oracle for small systems and a Monte Carlo simulator.
"""

from .errors import NumericInstabilityError, ValidationError
from .failure_chain import FailureChain, shock_rate, transition_matrix
from .oracle import CycleMetrics, FullStateModel, cycle_metrics
from .policy import (
    CostModel,
    PolicyEvaluation,
    evaluate_policy,
    iid_policy,
    kofn_policy,
    process_signature,
    sweep_policies,
    system_mttf,
    system_survival,
)
from .simulate import SimulationConfig, SimulationResult, convergence_study, simulate_horizons, simulate_policy
from .specs import RunSpec
from .structure import (
    BooleanFormula,
    FunctionStructure,
    KOutOfNF,
    Parallel,
    Series,
    Signature,
    TwoTerminal,
    structural_signature,
    structure_from_json,
    validate_semi_coherent,
)
from .subordinator import (
    CompoundPoissonExp,
    GammaSubordinator,
    InverseGaussian,
    PsiTable,
    PureDrift,
    RawTable,
    Stable,
    exponent_from_json,
    psi_table,
)

__version__ = "0.1.0"

__all__ = [
    "NumericInstabilityError",
    "ValidationError",
    "FailureChain",
    "shock_rate",
    "transition_matrix",
    "CycleMetrics",
    "FullStateModel",
    "cycle_metrics",
    "CostModel",
    "PolicyEvaluation",
    "evaluate_policy",
    "iid_policy",
    "kofn_policy",
    "process_signature",
    "sweep_policies",
    "system_mttf",
    "system_survival",
    "SimulationConfig",
    "SimulationResult",
    "convergence_study",
    "simulate_horizons",
    "simulate_policy",
    "RunSpec",
    "BooleanFormula",
    "FunctionStructure",
    "KOutOfNF",
    "Parallel",
    "Series",
    "Signature",
    "TwoTerminal",
    "structural_signature",
    "structure_from_json",
    "validate_semi_coherent",
    "CompoundPoissonExp",
    "GammaSubordinator",
    "InverseGaussian",
    "PsiTable",
    "PureDrift",
    "RawTable",
    "Stable",
    "exponent_from_json",
    "psi_table",
]
