"""Pipeline orchestration: phase sequencing, gates, metrics and artifacts.

Every mutation is persisted as its own project version, so the store
holds a complete audit trail and a crash leaves the last good phase
readable. In mock mode the pipeline runs against a fixed clock, which
makes the whole artifact tree byte-identical across runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import codegen, compliance, prioritization, stories, uml
from .errors import SdlcError
from .gateway import (
    ChatRequest,
    LiveProvider,
    MockProvider,
    MockScript,
    Provider,
    default_provider_configs,
)
from .model import (
    Decision,
    GenMethod,
    Method,
    Phase,
    PhaseMetric,
    PriorityFactors,
    Project,
    Provenance,
    UserStory,
    advance_phase,
)
from .prompts import PromptLibrary
from .store import ProjectStore, project_to_record
from .stories import StoryGenerationSpec, export_csv

FIXED_INSTANT = datetime(1970, 1, 1, tzinfo=timezone.utc)
METRICS_CSV_HEADER = ["phase", "method", "duration_ms", "provider", "timestamp"]


class PipelineHaltError(SdlcError):
    """A phase failed; the project remains persisted at its last good phase."""

    code = "pipeline_halt"

    def __init__(self, message: str, project: Project, cause: Exception):
        super().__init__(message, detail={"project_id": project.id, "phase": project.phase.value})
        self.project = project
        self.cause = cause


@dataclass(frozen=True)
class PipelineConfig:
    model_label: str = "gpt-3.5-turbo"
    prioritization_method: Method = Method.WSJF
    template_root: Path | None = None
    provider_mode: str = "mock"  # live | mock
    mock_script_path: Path | None = None
    renderer_base_url: str = ""
    store_root: Path = field(default_factory=lambda: Path("store"))
    headless: bool = True

    def __post_init__(self):
        if self.provider_mode not in ("live", "mock"):
            raise ValueError(f"provider_mode must be live or mock, got {self.provider_mode!r}")
        if self.provider_mode == "mock" and self.mock_script_path is None:
            raise ValueError("mock mode requires mock_script_path")


def build_provider(config: PipelineConfig) -> Provider:
    if config.provider_mode == "mock":
        return MockProvider(MockScript.load(config.mock_script_path))
    configs = default_provider_configs()
    if config.model_label not in configs:
        raise SdlcError(
            f"provider not configured for model {config.model_label!r}; "
            f"known: {', '.join(sorted(configs))}"
        )
    return LiveProvider(configs[config.model_label])


def deterministic_project_id(title: str, requirements_text: str) -> str:
    digest = hashlib.sha256(f"{title}\n{requirements_text}".encode("utf-8")).hexdigest()
    return f"p-{digest[:12]}"


def new_project(
    title: str, requirements_text: str, project_id: str | None = None, version: int = 1
) -> Project:
    if not requirements_text.strip():
        raise SdlcError("requirements text is empty")
    return Project(
        id=project_id or deterministic_project_id(title, requirements_text),
        title=title,
        requirements_text=requirements_text,
        version=version,
    )


def record_metric(
    project: Project,
    phase: Phase,
    method_label: str,
    duration_ms: int,
    provider_label: str = "",
    timestamp: datetime | None = None,
) -> Project:
    """Append one phase metric; metrics are append-only."""
    metric = PhaseMetric(
        phase=phase,
        method_label=method_label,
        duration_ms=duration_ms,
        provider_label=provider_label,
        timestamp=timestamp if timestamp is not None else datetime.now(timezone.utc),
    )
    return project.with_metric(metric)


def metrics_to_csv(project: Project) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(METRICS_CSV_HEADER)
    for metric in project.metrics:
        writer.writerow(
            [
                metric.phase.value,
                metric.method_label,
                metric.duration_ms,
                metric.provider_label,
                metric.timestamp.isoformat(),
            ]
        )
    return buffer.getvalue().encode("utf-8")


def attach_factors(
    story_list: tuple[UserStory, ...], factors: list
) -> tuple[UserStory, ...]:
    return tuple(
        UserStory(
            id=story.id,
            epic_id=story.epic_id,
            narrative=story.narrative,
            acceptance_criteria=story.acceptance_criteria,
            factors=story_factors,
        )
        for story, story_factors in zip(story_list, factors)
    )


def run_prioritization(
    project: Project,
    method: Method,
    provider: Provider,
    templates: PromptLibrary,
    model_label: str,
    factor_overrides: dict[str, PriorityFactors] | None = None,
) -> Project:
    """One prioritization round trip over the project's stories.

    For WSJF the human may override any suggested factors before
    ranking; provenance records whether the inputs were model-suggested,
    human-entered or mixed.
    """
    story_list = list(project.stories)
    prompt, fp = prioritization.construct_prioritization_prompt(method, story_list, templates)
    reply = provider.complete(
        ChatRequest(model_label=model_label, messages=(("user", prompt),), fingerprint=fp)
    )
    parsed = prioritization.parse_prioritization_response(method, reply.content, len(story_list))
    provenance = Provenance.LLM_SUGGESTED
    if method is Method.WSJF:
        factors = list(parsed)
        if factor_overrides:
            overridden = 0
            for i, story in enumerate(story_list):
                if story.id in factor_overrides:
                    factors[i] = factor_overrides[story.id]
                    overridden += 1
            provenance = (
                Provenance.HUMAN_ENTERED if overridden == len(story_list) else Provenance.MIXED
            )
        new_stories = attach_factors(project.stories, factors)
        result = prioritization.prioritize_wsjf(list(new_stories), provenance)
        return project.evolve(stories=new_stories, prioritization=result)
    if method is Method.AHP:
        result = prioritization.prioritize_ahp(story_list, parsed, provenance)
    elif method is Method.MOSCOW:
        result = prioritization.prioritize_moscow(story_list, parsed, provenance)
    else:
        result = prioritization.prioritize_hundred_dollar(story_list, parsed, provenance)
    return project.evolve(prioritization=result)


class PipelineRunner:
    """Drives one project through the phase chain with auto-approved gates."""

    def __init__(
        self,
        config: PipelineConfig,
        provider: Provider | None = None,
        clock: Callable[[], datetime] | None = None,
        timer: Callable[[], float] | None = None,
    ):
        self.config = config
        self.templates = PromptLibrary(config.template_root)
        self.provider = provider or build_provider(config)
        self.store = ProjectStore(config.store_root)
        mock = config.provider_mode == "mock"
        self.clock = clock or ((lambda: FIXED_INSTANT) if mock else lambda: datetime.now(timezone.utc))
        self.timer = timer or ((lambda: 0.0) if mock else time.perf_counter)

    def _save(self, project: Project) -> Project:
        self.store.save(project)
        return project

    def _timed(self, project: Project, method_label: str, work) -> Project:
        started = self.timer()
        project = work(project)
        duration_ms = max(0, int((self.timer() - started) * 1000))
        project = record_metric(
            project,
            project.phase,
            method_label,
            duration_ms,
            provider_label=getattr(self.provider, "label", ""),
            timestamp=self.clock(),
        )
        return self._save(project)

    def _approve(self, project: Project) -> Project:
        return self._save(advance_phase(project, Decision.APPROVE))

    def _phase_requirements(self, project: Project) -> Project:
        result = stories.generate_user_stories(
            StoryGenerationSpec(
                objective=project.requirements_text, model_label=self.config.model_label
            ),
            self.provider,
            self.templates,
        )
        return self._save(project.evolve(epics=result.epics, stories=result.stories))

    def _phase_prioritization(self, project: Project) -> Project:
        return self._save(
            run_prioritization(
                project,
                self.config.prioritization_method,
                self.provider,
                self.templates,
                self.config.model_label,
            )
        )

    def _phase_architecture(self, project: Project) -> Project:
        artifact = uml.generate_uml(
            project.requirements_text, self.config.model_label, self.provider, self.templates
        )
        if self.config.renderer_base_url:
            try:
                diagram, media_type = uml.render_diagram(
                    artifact.encoded, self.config.renderer_base_url
                )
                artifact = uml.UmlArtifact(
                    source=artifact.source,
                    encoded=artifact.encoded,
                    diagram_bytes=diagram,
                    diagram_media_type=media_type,
                    critique=artifact.critique,
                )
            except uml.RenderTransportError:
                pass  # partial artifact: source and encoded text are kept
        return self._save(project.evolve(uml=artifact))

    def _generate_code(self, project: Project, methods: tuple[GenMethod, ...]) -> Project:
        artifacts = tuple(
            codegen.generate_artifact(
                codegen.GenerationRequest(
                    content=project.requirements_text,
                    model_label=self.config.model_label,
                    method=method,
                ),
                self.provider,
                self.templates,
            )
            for method in methods
        )
        return self._save(project.evolve(code_artifacts=project.code_artifacts + artifacts))

    def _phase_compliance(self, project: Project) -> Project:
        report = compliance.compliance_review(
            project, self.provider, self.templates, model_label=self.config.model_label
        )
        return self._save(project.evolve(compliance=report))

    def run(self, requirements_text: str, title: str = "Untitled project") -> Project:
        """Execute all phases in order; any phase error halts the pipeline."""
        if not requirements_text.strip():
            raise SdlcError("requirements text is empty")
        project_id = deterministic_project_id(title, requirements_text)
        version = (self.store.latest_version(project_id) or 0) + 1
        project = new_project(title, requirements_text, project_id=project_id, version=version)
        project = self._save(project)
        steps = [
            ("user_stories", self._phase_requirements),
            (self.config.prioritization_method.value, self._phase_prioritization),
            ("plantuml", self._phase_architecture),
            (
                "backend,frontend",
                lambda p: self._generate_code(p, (GenMethod.BACKEND, GenMethod.FRONTEND)),
            ),
            (
                "unit_test,e2e_test",
                lambda p: self._generate_code(p, (GenMethod.UNIT_TEST, GenMethod.E2E_TEST)),
            ),
            ("compliance_checklist", self._phase_compliance),
        ]
        for method_label, work in steps:
            try:
                project = self._timed(project, method_label, work)
            except SdlcError as exc:
                raise PipelineHaltError(
                    f"pipeline halted during {project.phase.value}: {exc}", project, exc
                ) from exc
            if not self.config.headless:
                return project  # caller drives the gate from here
            project = self._approve(project)
        return project


def run_pipeline(
    requirements_text: str, config: PipelineConfig, title: str = "Untitled project"
) -> Project:
    return PipelineRunner(config).run(requirements_text, title=title)


def write_artifact_tree(project: Project, out_root: Path | str) -> Path:
    """Write the human-facing artifact tree for one project.

    Timestamps appear only in metrics.csv; every other file is a pure
    function of the project's artifact content.
    """
    root = Path(out_root) / project.id
    root.mkdir(parents=True, exist_ok=True)
    record = project_to_record(project)
    record.pop("metrics")
    (root / "project.json").write_text(
        json.dumps(record, indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    if project.prioritization is not None:
        (root / "prioritization.csv").write_bytes(
            export_csv(project.prioritization, project.stories, project.epics)
        )
    if project.uml is not None:
        uml_dir = root / "uml"
        uml_dir.mkdir(exist_ok=True)
        (uml_dir / "diagram.puml").write_text(project.uml.source + "\n", encoding="utf-8")
        (uml_dir / "diagram.encoded.txt").write_text(project.uml.encoded + "\n", encoding="utf-8")
        if project.uml.diagram_bytes is not None:
            (uml_dir / "diagram.svg").write_bytes(project.uml.diagram_bytes)
    for artifact in project.code_artifacts:
        method_dir = root / artifact.method.value
        method_dir.mkdir(exist_ok=True)
        for index, block in enumerate(artifact.blocks, start=1):
            ext = codegen.extension_for_language(block.language_label)
            (method_dir / f"{index}.{ext}").write_text(block.body + "\n", encoding="utf-8")
    if project.compliance is not None:
        report = {
            "checklist_version": project.compliance.checklist_version,
            "degraded": project.compliance.degraded,
            "llm_narrative": project.compliance.llm_narrative,
            "findings": [
                {
                    "rule_id": f.rule_id,
                    "severity": f.severity,
                    "subject": f.subject,
                    "detail": f.detail,
                }
                for f in project.compliance.findings
            ],
        }
        (root / "compliance.json").write_text(
            json.dumps(report, indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    (root / "metrics.csv").write_bytes(metrics_to_csv(project))
    return root
