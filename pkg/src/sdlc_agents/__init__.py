"""Multi-agent SDLC orchestration toolkit.

Turns free-text requirements into prioritized user stories, a UML
sequence diagram, code and test artifacts and a compliance report,
with human approval gates between phases and a deterministic mock
provider for fully offline runs.
"""

__version__ = "0.1.0"

from .model import (
    Bucket,
    Decision,
    Epic,
    GateStatus,
    GenMethod,
    Method,
    Phase,
    PriorityFactors,
    PrioritizationResult,
    Project,
    Provenance,
    UserStory,
    advance_phase,
    validate_story,
)
from .pipeline import PipelineConfig, run_pipeline
from .prioritization import (
    AhpMatrix,
    ahp_consistency_ratio,
    ahp_priorities,
    hundred_dollar_normalize,
    wsjf_score,
)
from .uml import extract_uml_block, plantuml_decode, plantuml_encode

__all__ = [
    "AhpMatrix",
    "Bucket",
    "Decision",
    "Epic",
    "GateStatus",
    "GenMethod",
    "Method",
    "Phase",
    "PipelineConfig",
    "PriorityFactors",
    "PrioritizationResult",
    "Project",
    "Provenance",
    "UserStory",
    "advance_phase",
    "ahp_consistency_ratio",
    "ahp_priorities",
    "extract_uml_block",
    "hundred_dollar_normalize",
    "plantuml_decode",
    "plantuml_encode",
    "run_pipeline",
    "validate_story",
    "wsjf_score",
]
