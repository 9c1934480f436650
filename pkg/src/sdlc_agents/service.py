"""HTTP facade over the agents, the store and the phase gates.

Every error response body is an ApiError document with a code from the
published closed set; agent failures never leak stack traces. Mutating
endpoints honor an Idempotency-Key header: replaying a key returns the
original response.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import httpx
from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import codegen, compliance, stories, uml
from .errors import SdlcError
from .gateway import (
    LiveProvider,
    MockProvider,
    MockScript,
    Provider,
    ProviderError,
    default_provider_configs,
)
from .model import (
    Decision,
    GenMethod,
    Method,
    Phase,
    PhaseGateError,
    PriorityFactors,
    Project,
    TerminalPhaseError,
    advance_phase,
    phase_index,
)
from .pipeline import record_metric, run_prioritization
from .prioritization import ResponseParseError, UnknownMethodError, round_half_even
from .prompts import PromptLibrary
from .store import MissingProjectError, ProjectStore, VersionConflictError, project_to_record
from .stories import StoryGenerationSpec, export_csv, generate_user_stories
from .uml import UmlExtractionError

MAX_UPLOAD_BYTES = 1024 * 1024

# Closed set of error codes an ApiError may carry.
ERROR_CODES = (
    "bad_request",
    "configuration",
    "corrupt_record",
    "diagram_not_rendered",
    "domain_error",
    "empty_objective",
    "empty_project",
    "no_code_blocks",
    "parse_failure",
    "payload_too_large",
    "phase_violation",
    "provider_failure",
    "terminal_phase",
    "uml_extraction",
    "unknown_method",
    "unknown_project",
    "unterminated_fence",
    "version_conflict",
)


class PhaseViolation(SdlcError):
    code = "phase_violation"


@dataclass(frozen=True)
class ServiceConfig:
    provider_mode: str = "mock"
    mock_script_path: Path | None = None
    model_label: str = "gpt-3.5-turbo"
    store_root: Path = Path("store")
    template_root: Path | None = None
    renderer_base_url: str = ""
    cors_origin: str = "*"
    ui_dist: Path | None = None


def _status_for(exc: SdlcError) -> int:
    if isinstance(exc, MissingProjectError):
        return 404
    if isinstance(exc, (PhaseViolation, PhaseGateError, TerminalPhaseError, VersionConflictError)):
        return 409
    if isinstance(exc, ProviderError):
        return 502
    if isinstance(
        exc,
        (
            ResponseParseError,
            UmlExtractionError,
            codegen.NoCodeBlocksError,
            codegen.UnterminatedFenceError,
            stories.EmptyResultError,
        ),
    ):
        return 422
    return 400


def _api_error(code: str, message: str, status: int, detail=None) -> JSONResponse:
    body = {"code": code if code in ERROR_CODES else "domain_error", "message": message}
    if detail is not None:
        body["detail"] = detail
    return JSONResponse(status_code=status, content=body)


def _require_phase(project: Project, expected: Phase) -> None:
    if project.phase is not expected:
        raise PhaseViolation(
            f"operation requires phase {expected.value}, project is at {project.phase.value}"
        )


def _ranked_view(project: Project) -> list[dict]:
    rows = []
    for row in sorted(project.prioritization.ranked, key=lambda r: r.rank):
        display = ""
        if row.score is not None:
            display = round_half_even(row.score)
        elif row.allocation is not None:
            display = round_half_even(row.allocation)
        elif row.bucket is not None:
            display = row.bucket.value
        rows.append({"rank": row.rank, "story_id": row.story_id, "display": display})
    return rows


def _project_view(project: Project) -> dict:
    view = project_to_record(project)
    if project.prioritization is not None:
        view["prioritization"]["display"] = _ranked_view(project)
    return view


def create_app(
    config: ServiceConfig,
    provider: Provider | None = None,
    renderer_client: httpx.Client | None = None,
) -> FastAPI:
    app = FastAPI(title="sdlc-agents", version="0.1.0")
    if config.cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[config.cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    store = ProjectStore(config.store_root)
    templates = PromptLibrary(config.template_root)
    if provider is None:
        if config.provider_mode == "mock":
            if config.mock_script_path is None:
                raise ValueError("mock mode requires mock_script_path")
            provider = MockProvider(MockScript.load(config.mock_script_path))
        else:
            configs = default_provider_configs()
            if config.model_label not in configs:
                raise ValueError(f"provider not configured for {config.model_label!r}")
            provider = LiveProvider(configs[config.model_label])
    app.state.store = store
    app.state.provider = provider
    app.state.idempotency = {}

    @app.exception_handler(SdlcError)
    async def handle_domain_error(_request: Request, exc: SdlcError):
        return _api_error(exc.code, exc.message, _status_for(exc), detail=exc.detail)

    @app.exception_handler(Exception)
    async def handle_unexpected(_request: Request, exc: Exception):
        return _api_error("domain_error", f"unexpected failure: {type(exc).__name__}", 500)

    @app.middleware("http")
    async def idempotency_replay(request: Request, call_next):
        key = request.headers.get("Idempotency-Key")
        if not key or request.method not in ("POST", "PUT", "PATCH", "DELETE"):
            return await call_next(request)
        cache = app.state.idempotency
        if key in cache:
            status, body, media_type = cache[key]
            return Response(content=body, status_code=status, media_type=media_type)
        response = await call_next(request)
        body = b"".join([chunk async for chunk in response.body_iterator])
        cache[key] = (response.status_code, body, response.media_type)
        return Response(
            content=body,
            status_code=response.status_code,
            media_type=response.media_type,
            headers={
                name: value
                for name, value in response.headers.items()
                if name.lower() != "content-length"
            },
        )

    def _load(project_id: str) -> Project:
        return store.load(project_id)

    def _save_with_metric(project: Project, method_label: str, started: float) -> Project:
        store.save(project)
        project = record_metric(
            project,
            project.phase,
            method_label,
            duration_ms=max(0, int((time.perf_counter() - started) * 1000)),
            provider_label=getattr(provider, "label", ""),
            timestamp=datetime.now(timezone.utc),
        )
        store.save(project)
        return project

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.post("/api/projects", status_code=201)
    async def create_project(request: Request):
        declared = request.headers.get("content-length")
        if declared and int(declared) > MAX_UPLOAD_BYTES + 4096:
            return _api_error("payload_too_large", "upload exceeds 1 MiB", 413)
        content_type = request.headers.get("content-type", "")
        title = "Untitled project"
        if content_type.startswith("multipart/"):
            form = await request.form()
            title = str(form.get("title") or title)
            upload = form.get("file")
            if upload is None:
                return _api_error("bad_request", "multipart upload needs a 'file' field", 400)
            raw = await upload.read()
            if len(raw) > MAX_UPLOAD_BYTES:
                return _api_error("payload_too_large", "upload exceeds 1 MiB", 413)
            text = raw.decode("utf-8")
        else:
            raw = await request.body()
            if len(raw) > MAX_UPLOAD_BYTES:
                return _api_error("payload_too_large", "upload exceeds 1 MiB", 413)
            try:
                body = await request.json()
            except Exception:
                return _api_error("bad_request", "body must be JSON or multipart", 400)
            title = str(body.get("title") or title)
            text = str(body.get("requirements_text") or "")
        if not text.strip():
            return _api_error("bad_request", "requirements_text is empty", 400)
        import uuid

        project = Project(id=f"p-{uuid.uuid4().hex[:12]}", title=title, requirements_text=text)
        store.save(project)
        return {"project_id": project.id}

    @app.get("/api/projects")
    async def list_projects():
        out = []
        for project_id in store.ids():
            project = store.load(project_id)
            out.append(
                {
                    "id": project.id,
                    "title": project.title,
                    "phase": project.phase.value,
                    "gate": project.gate.value,
                }
            )
        return {"projects": out}

    @app.get("/api/projects/{project_id}")
    async def get_project(project_id: str):
        return _project_view(_load(project_id))

    @app.post("/api/projects/{project_id}/stories")
    async def post_stories(project_id: str, request: Request):
        body = {}
        if (await request.body()).strip():
            body = await request.json()
        project = _load(project_id)
        _require_phase(project, Phase.REQUIREMENTS)
        started = time.perf_counter()
        spec = StoryGenerationSpec(
            objective=project.requirements_text,
            num_stories=int(body.get("num_stories", 10)),
            model_label=str(body.get("model") or config.model_label),
        )
        result = generate_user_stories(spec, provider, templates)
        project = project.evolve(epics=result.epics, stories=result.stories)
        project = _save_with_metric(project, "user_stories", started)
        return {
            "epics": [{"id": e.id, "title": e.title} for e in result.epics],
            "stories": [
                {"id": s.id, "epic_id": s.epic_id, "narrative": s.narrative}
                for s in result.stories
            ],
            "shortfall": result.shortfall,
        }

    @app.post("/api/projects/{project_id}/prioritize")
    async def post_prioritize(project_id: str, request: Request):
        body = await request.json()
        method_name = str(body.get("method") or "")
        try:
            method = Method(method_name)
        except ValueError:
            raise UnknownMethodError(f"unknown prioritization method {method_name!r}")
        project = _load(project_id)
        _require_phase(project, Phase.PRIORITIZATION)
        overrides = None
        if body.get("factor_overrides"):
            overrides = {
                story_id: PriorityFactors(
                    business_value=f["bv"],
                    time_criticality=f["tc"],
                    risk_reduction=f["rr"],
                    job_size=f["js"],
                )
                for story_id, f in body["factor_overrides"].items()
            }
        started = time.perf_counter()
        project = run_prioritization(
            project, method, provider, templates, config.model_label, factor_overrides=overrides
        )
        project = _save_with_metric(project, method.value, started)
        return {
            "method": method.value,
            "provenance": project.prioritization.provenance.value,
            "ranked": _ranked_view(project),
        }

    @app.get("/api/projects/{project_id}/prioritization.csv")
    async def get_csv(project_id: str):
        project = _load(project_id)
        if project.prioritization is None:
            raise PhaseViolation("project has no prioritization result yet")
        data = export_csv(project.prioritization, project.stories, project.epics)
        return Response(
            content=data,
            media_type="text/csv; charset=utf-8",
            headers={"Content-Disposition": 'attachment; filename="prioritization.csv"'},
        )

    @app.post("/api/projects/{project_id}/uml")
    async def post_uml(project_id: str, request: Request):
        body = {}
        if (await request.body()).strip():
            body = await request.json()
        project = _load(project_id)
        _require_phase(project, Phase.ARCHITECTURE)
        started = time.perf_counter()
        artifact = uml.generate_uml(
            project.requirements_text,
            str(body.get("model") or config.model_label),
            provider,
            templates,
        )
        if config.renderer_base_url:
            try:
                diagram, media_type = uml.render_diagram(
                    artifact.encoded, config.renderer_base_url, client=renderer_client
                )
                artifact = uml.UmlArtifact(
                    source=artifact.source,
                    encoded=artifact.encoded,
                    diagram_bytes=diagram,
                    diagram_media_type=media_type,
                    critique=artifact.critique,
                )
            except uml.RenderTransportError:
                pass  # keep the partial artifact; rendering can be retried
        project = project.evolve(uml=artifact)
        project = _save_with_metric(project, "plantuml", started)
        return {
            "source": artifact.source,
            "encoded": artifact.encoded,
            "critique": artifact.critique,
            "rendered": artifact.diagram_bytes is not None,
        }

    @app.get("/api/projects/{project_id}/uml.svg")
    async def get_uml_svg(project_id: str):
        project = _load(project_id)
        if phase_index(project.phase) < phase_index(Phase.ARCHITECTURE) or project.uml is None:
            raise PhaseViolation("no UML artifact before the architecture phase")
        if project.uml.diagram_bytes is None:
            return _api_error("diagram_not_rendered", "diagram has not been rendered", 404)
        return Response(content=project.uml.diagram_bytes, media_type="image/svg+xml")

    @app.post("/api/code")
    async def post_code(request: Request):
        body = await request.json()
        method_name = str(body.get("method") or "")
        try:
            method = GenMethod(method_name)
        except ValueError:
            return _api_error("unknown_method", f"unknown generation method {method_name!r}", 400)
        content = str(body.get("content") or "")
        if not content.strip():
            return _api_error("bad_request", "content is empty", 400)
        artifact = codegen.generate_artifact(
            codegen.GenerationRequest(
                content=content,
                model_label=str(body.get("model") or config.model_label),
                method=method,
            ),
            provider,
            templates,
        )
        return {
            "method": artifact.method.value,
            "narrative": artifact.narrative,
            "blocks": [
                {"language_label": b.language_label, "body": b.body} for b in artifact.blocks
            ],
        }

    @app.post("/api/projects/{project_id}/code")
    async def post_project_code(project_id: str, request: Request):
        body = await request.json()
        method_name = str(body.get("method") or "")
        try:
            method = GenMethod(method_name)
        except ValueError:
            return _api_error("unknown_method", f"unknown generation method {method_name!r}", 400)
        project = _load(project_id)
        expected = (
            Phase.CODE_GENERATION
            if method in (GenMethod.BACKEND, GenMethod.FRONTEND)
            else Phase.TESTING
        )
        _require_phase(project, expected)
        started = time.perf_counter()
        artifact = codegen.generate_artifact(
            codegen.GenerationRequest(
                content=project.requirements_text,
                model_label=str(body.get("model") or config.model_label),
                method=method,
            ),
            provider,
            templates,
        )
        project = project.evolve(code_artifacts=project.code_artifacts + (artifact,))
        project = _save_with_metric(project, method.value, started)
        return {
            "method": artifact.method.value,
            "narrative": artifact.narrative,
            "blocks": [
                {"language_label": b.language_label, "body": b.body} for b in artifact.blocks
            ],
        }

    @app.post("/api/projects/{project_id}/compliance")
    async def post_compliance(project_id: str):
        project = _load(project_id)
        _require_phase(project, Phase.COMPLIANCE)
        started = time.perf_counter()
        report = compliance.compliance_review(
            project, provider, templates, model_label=config.model_label
        )
        project = project.evolve(compliance=report)
        project = _save_with_metric(project, "compliance_checklist", started)
        return {
            "checklist_version": report.checklist_version,
            "degraded": report.degraded,
            "llm_narrative": report.llm_narrative,
            "findings": [
                {
                    "rule_id": f.rule_id,
                    "severity": f.severity,
                    "subject": f.subject,
                    "detail": f.detail,
                }
                for f in report.findings
            ],
        }

    @app.post("/api/projects/{project_id}/phase")
    async def post_phase(project_id: str, request: Request):
        body = await request.json()
        decision_name = str(body.get("decision") or "")
        try:
            decision = Decision(decision_name)
        except ValueError:
            return _api_error("bad_request", f"unknown decision {decision_name!r}", 400)
        project = _load(project_id)
        project = advance_phase(project, decision)
        store.save(project)
        return {
            "phase": project.phase.value,
            "gate": project.gate.value,
            "revision": project.revision,
            "version": project.version,
        }

    @app.get("/api/projects/{project_id}/metrics")
    async def get_metrics(project_id: str):
        project = _load(project_id)
        return {
            "metrics": [
                {
                    "phase": m.phase.value,
                    "method_label": m.method_label,
                    "duration_ms": m.duration_ms,
                    "provider_label": m.provider_label,
                    "timestamp": m.timestamp.isoformat(),
                }
                for m in project.metrics
            ]
        }

    if config.ui_dist and Path(config.ui_dist).is_dir():
        app.mount("/", StaticFiles(directory=str(config.ui_dist), html=True), name="ui")

    return app
