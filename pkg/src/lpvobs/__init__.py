"""Set-valued simultaneous input and state observers for polytopic LPV
systems under completely unknown (attack) inputs and bounded noise.

Workflow: describe the plant (model), decouple the feedthrough channel
(decouple), check observer existence (detect), synthesize the gain by
semidefinite programming (synthesize), run the three-step filter with
certified ball radii (observer), and validate everything against the
closed-form error oracle and Monte-Carlo campaigns (harness).
"""

from .decouple import (
    DecoupledModel,
    decouple,
    recombine_unknown_input,
    split_output,
    split_unknown_input,
)
from .detect import (
    DetectabilityReport,
    existence_report,
    pair_detectability,
    strong_detectability,
)
from .errors import (
    BoundednessError,
    ContainmentError,
    ConvergenceError,
    InfeasibleError,
    ModelStructureError,
    StructuralError,
    WeightError,
)
from .harness import (
    CampaignReport,
    OracleErrors,
    PlantTruth,
    Scenario,
    SimulationTrace,
    benchmark_model,
    benchmark_scenario,
    containment_campaign,
    oracle_errors,
    run_observer,
    simulate_plant,
)
from .model import LpvModel, ValidationReport, evaluate_at, validate_model, validate_weights
from .observer import (
    ObserverState,
    SetEstimate,
    initialize,
    input_radius,
    state_radius,
    steady_state_radii,
    step,
)
from .synthesize import (
    ErrorConstants,
    SynthesisCertificate,
    SynthesisOptions,
    error_constants,
    lmi_block,
    synthesize_convergent,
    synthesize_hinf,
    verify_lmi,
)

__version__ = "0.1.0"

__all__ = [
    "BoundednessError",
    "CampaignReport",
    "ContainmentError",
    "ConvergenceError",
    "DecoupledModel",
    "DetectabilityReport",
    "ErrorConstants",
    "InfeasibleError",
    "LpvModel",
    "ModelStructureError",
    "ObserverState",
    "OracleErrors",
    "PlantTruth",
    "Scenario",
    "SetEstimate",
    "SimulationTrace",
    "StructuralError",
    "SynthesisCertificate",
    "SynthesisOptions",
    "ValidationReport",
    "WeightError",
    "benchmark_model",
    "benchmark_scenario",
    "containment_campaign",
    "decouple",
    "error_constants",
    "evaluate_at",
    "existence_report",
    "initialize",
    "input_radius",
    "lmi_block",
    "oracle_errors",
    "pair_detectability",
    "recombine_unknown_input",
    "run_observer",
    "simulate_plant",
    "split_output",
    "split_unknown_input",
    "state_radius",
    "steady_state_radii",
    "step",
    "strong_detectability",
    "synthesize_convergent",
    "synthesize_hinf",
    "validate_model",
    "validate_weights",
    "verify_lmi",
]
