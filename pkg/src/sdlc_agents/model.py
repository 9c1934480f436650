"""Project aggregate, phase state machine and story vocabulary.

Everything here is an immutable value: mutation helpers return a new
``Project`` snapshot with ``version`` bumped by one, so snapshots can be
shared across threads and persisted as an append-only version history.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from fractions import Fraction

from .errors import SdlcError


class Phase(Enum):
    REQUIREMENTS = "requirements"
    PRIORITIZATION = "prioritization"
    ARCHITECTURE = "architecture"
    CODE_GENERATION = "code_generation"
    TESTING = "testing"
    COMPLIANCE = "compliance"
    DONE = "done"


# Forward chain; the only legal move is to the immediately next phase.
PHASE_ORDER: tuple[Phase, ...] = (
    Phase.REQUIREMENTS,
    Phase.PRIORITIZATION,
    Phase.ARCHITECTURE,
    Phase.CODE_GENERATION,
    Phase.TESTING,
    Phase.COMPLIANCE,
    Phase.DONE,
)


class GateStatus(Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"


class Decision(Enum):
    APPROVE = "approve"
    REJECT = "reject"


class Method(Enum):
    WSJF = "wsjf"
    AHP = "ahp"
    MOSCOW = "moscow"
    HUNDRED_DOLLAR = "hundred_dollar"


class Bucket(Enum):
    MUST = "must"
    SHOULD = "should"
    COULD = "could"
    WONT = "wont"


class Provenance(Enum):
    LLM_SUGGESTED = "llm_suggested"
    HUMAN_ENTERED = "human_entered"
    MIXED = "mixed"


class GenMethod(Enum):
    """The four code-generation methods."""

    BACKEND = "backend"
    FRONTEND = "frontend"
    UNIT_TEST = "unit_test"
    E2E_TEST = "e2e_test"


class TerminalPhaseError(SdlcError):
    code = "terminal_phase"


class PhaseGateError(SdlcError):
    code = "phase_violation"


def next_phase(phase: Phase) -> Phase:
    idx = PHASE_ORDER.index(phase)
    if idx + 1 >= len(PHASE_ORDER):
        raise TerminalPhaseError("cannot advance past terminal phase 'done'")
    return PHASE_ORDER[idx + 1]


def phase_index(phase: Phase) -> int:
    return PHASE_ORDER.index(phase)


@dataclass(frozen=True)
class PriorityFactors:
    """WSJF inputs: all integers in [1, 10]."""

    business_value: int
    time_criticality: int
    risk_reduction: int
    job_size: int

    def __post_init__(self):
        for name in ("business_value", "time_criticality", "risk_reduction", "job_size"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 10:
                raise ValueError(f"{name} must be an integer in [1,10], got {value!r}")


@dataclass(frozen=True)
class Epic:
    id: str
    title: str
    description: str = ""

    def __post_init__(self):
        if not self.title.strip():
            raise ValueError("epic title must be non-empty")


@dataclass(frozen=True)
class UserStory:
    id: str
    epic_id: str
    narrative: str
    acceptance_criteria: tuple[str, ...] = ()
    factors: PriorityFactors | None = None


def validate_story(story: UserStory, epics: tuple[Epic, ...] | None = None) -> list[str]:
    """Return the list of violated invariants; empty list means ok.

    Violations are data, not faults: callers decide what to do with them.
    Epic resolution is only checked when ``epics`` is provided.
    """
    violations = []
    if not story.narrative.strip():
        violations.append("narrative empty")
    if epics is not None and story.epic_id not in {e.id for e in epics}:
        violations.append(f"epic_id {story.epic_id!r} does not resolve to an existing epic")
    for criterion in story.acceptance_criteria:
        if not criterion.strip():
            violations.append("acceptance criterion empty")
            break
    return violations


@dataclass(frozen=True)
class RankedStory:
    """One row of a prioritization outcome.

    Exactly one of score / bucket / allocation is set, matching the method
    that produced it. ``score`` and ``allocation`` are exact rationals;
    rounding happens only at display or export.
    """

    story_id: str
    rank: int
    score: Fraction | None = None
    bucket: Bucket | None = None
    allocation: Fraction | None = None


@dataclass(frozen=True)
class PrioritizationResult:
    method: Method
    ranked: tuple[RankedStory, ...]
    provenance: Provenance

    def __post_init__(self):
        ranks = sorted(r.rank for r in self.ranked)
        if ranks != list(range(1, len(self.ranked) + 1)):
            raise ValueError(f"ranks must be 1..n with no gaps, got {ranks}")
        value_field = {
            Method.WSJF: "score",
            Method.AHP: "score",
            Method.MOSCOW: "bucket",
            Method.HUNDRED_DOLLAR: "allocation",
        }[self.method]
        for row in self.ranked:
            populated = [
                name
                for name in ("score", "bucket", "allocation")
                if getattr(row, name) is not None
            ]
            if populated != [value_field]:
                raise ValueError(
                    f"method {self.method.value} requires exactly {value_field!r} "
                    f"populated, got {populated} on story {row.story_id}"
                )
        if self.method is Method.HUNDRED_DOLLAR and self.ranked:
            total = sum(r.allocation for r in self.ranked)
            if total != 100:
                raise ValueError(f"hundred_dollar allocations must sum to exactly 100, got {total}")


@dataclass(frozen=True)
class UmlArtifact:
    """Extracted diagram source, its encoded form and the rendered bytes.

    ``source`` never contains the @startuml/@enduml marker lines;
    ``critique`` holds any non-UML commentary the model returned.
    """

    source: str
    encoded: str = ""
    diagram_bytes: bytes | None = None
    diagram_media_type: str = ""
    critique: str = ""

    def __post_init__(self):
        for line in self.source.splitlines():
            stripped = line.strip()
            if stripped.startswith("@startuml") or stripped.startswith("@enduml"):
                raise ValueError("uml source must not contain marker lines")
        if self.diagram_bytes is not None and self.diagram_media_type != "image/svg+xml":
            raise ValueError("rendered diagrams must carry media type image/svg+xml")


@dataclass(frozen=True)
class CodeBlock:
    language_label: str
    body: str


@dataclass(frozen=True)
class CodeArtifact:
    method: GenMethod
    blocks: tuple[CodeBlock, ...]
    narrative: str = ""
    source_request_id: str = ""


@dataclass(frozen=True)
class Finding:
    rule_id: str
    severity: str  # info | warning | violation
    subject: str
    detail: str


@dataclass(frozen=True)
class ComplianceReport:
    findings: tuple[Finding, ...]
    checklist_version: str
    llm_narrative: str = ""
    degraded: bool = False


@dataclass(frozen=True)
class PhaseMetric:
    phase: Phase
    method_label: str
    duration_ms: int
    provider_label: str
    timestamp: datetime

    def __post_init__(self):
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be >= 0")


@dataclass(frozen=True)
class Project:
    id: str
    title: str
    requirements_text: str
    phase: Phase = Phase.REQUIREMENTS
    gate: GateStatus = GateStatus.PENDING
    revision: int = 0
    epics: tuple[Epic, ...] = ()
    stories: tuple[UserStory, ...] = ()
    prioritization: PrioritizationResult | None = None
    uml: UmlArtifact | None = None
    code_artifacts: tuple[CodeArtifact, ...] = ()
    compliance: ComplianceReport | None = None
    metrics: tuple[PhaseMetric, ...] = ()
    version: int = 1

    def evolve(self, **changes) -> "Project":
        """New snapshot with ``changes`` applied and version bumped by one."""
        changes.setdefault("version", self.version + 1)
        return replace(self, **changes)

    def with_metric(self, metric: PhaseMetric) -> "Project":
        return self.evolve(metrics=self.metrics + (metric,))


def advance_phase(project: Project, decision: Decision) -> Project:
    """Apply a human gate decision.

    Approve moves to the immediately next phase with a pending gate;
    reject keeps the phase, marks the gate rejected and bumps the
    revision so reworked artifacts are distinguishable from the
    rejected ones.
    """
    if project.phase is Phase.DONE:
        raise TerminalPhaseError("project already at terminal phase 'done'")
    if decision is Decision.REJECT:
        return project.evolve(gate=GateStatus.REJECTED, revision=project.revision + 1)
    if project.phase is Phase.REQUIREMENTS and not project.stories:
        raise PhaseGateError("cannot approve requirements: project has no stories")
    return project.evolve(phase=next_phase(project.phase), gate=GateStatus.PENDING)
