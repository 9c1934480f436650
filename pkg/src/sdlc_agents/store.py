"""File-backed project store with optimistic versioning.

Layout: one JSON document per project version under
``store_root/<id>/<version>.json`` plus a root ``index.json`` mapping
ids to their latest version. Writes go through a temp file and an
atomic rename, so a crash mid-save leaves the previous version
readable. Each document embeds a checksum of its payload; a mismatch on
load is reported as corruption, never silently accepted.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from pathlib import Path

from .errors import SdlcError
from .model import (
    Bucket,
    CodeArtifact,
    CodeBlock,
    ComplianceReport,
    Epic,
    Finding,
    GateStatus,
    GenMethod,
    Method,
    Phase,
    PhaseMetric,
    PriorityFactors,
    PrioritizationResult,
    Project,
    Provenance,
    RankedStory,
    UserStory,
    UmlArtifact,
)


class VersionConflictError(SdlcError):
    code = "version_conflict"


class MissingProjectError(SdlcError):
    code = "unknown_project"


class CorruptRecordError(SdlcError):
    code = "corrupt_record"


def _fraction_str(value: Fraction | None) -> str | None:
    return None if value is None else f"{value.numerator}/{value.denominator}"


def _fraction(value: str | None) -> Fraction | None:
    if value is None:
        return None
    num, den = value.split("/")
    return Fraction(int(num), int(den))


def project_to_record(project: Project) -> dict:
    """JSON-ready dict that round-trips exactly through project_from_record."""
    return {
        "id": project.id,
        "title": project.title,
        "requirements_text": project.requirements_text,
        "phase": project.phase.value,
        "gate": project.gate.value,
        "revision": project.revision,
        "version": project.version,
        "epics": [
            {"id": e.id, "title": e.title, "description": e.description} for e in project.epics
        ],
        "stories": [
            {
                "id": s.id,
                "epic_id": s.epic_id,
                "narrative": s.narrative,
                "acceptance_criteria": list(s.acceptance_criteria),
                "factors": None
                if s.factors is None
                else {
                    "bv": s.factors.business_value,
                    "tc": s.factors.time_criticality,
                    "rr": s.factors.risk_reduction,
                    "js": s.factors.job_size,
                },
            }
            for s in project.stories
        ],
        "prioritization": None
        if project.prioritization is None
        else {
            "method": project.prioritization.method.value,
            "provenance": project.prioritization.provenance.value,
            "ranked": [
                {
                    "story_id": r.story_id,
                    "rank": r.rank,
                    "score": _fraction_str(r.score),
                    "bucket": None if r.bucket is None else r.bucket.value,
                    "allocation": _fraction_str(r.allocation),
                }
                for r in project.prioritization.ranked
            ],
        },
        "uml": None
        if project.uml is None
        else {
            "source": project.uml.source,
            "encoded": project.uml.encoded,
            "diagram_b16": None
            if project.uml.diagram_bytes is None
            else project.uml.diagram_bytes.hex(),
            "diagram_media_type": project.uml.diagram_media_type,
            "critique": project.uml.critique,
        },
        "code_artifacts": [
            {
                "method": a.method.value,
                "narrative": a.narrative,
                "source_request_id": a.source_request_id,
                "blocks": [
                    {"language_label": b.language_label, "body": b.body} for b in a.blocks
                ],
            }
            for a in project.code_artifacts
        ],
        "compliance": None
        if project.compliance is None
        else {
            "checklist_version": project.compliance.checklist_version,
            "llm_narrative": project.compliance.llm_narrative,
            "degraded": project.compliance.degraded,
            "findings": [
                {
                    "rule_id": f.rule_id,
                    "severity": f.severity,
                    "subject": f.subject,
                    "detail": f.detail,
                }
                for f in project.compliance.findings
            ],
        },
        "metrics": [
            {
                "phase": m.phase.value,
                "method_label": m.method_label,
                "duration_ms": m.duration_ms,
                "provider_label": m.provider_label,
                "timestamp": m.timestamp.isoformat(),
            }
            for m in project.metrics
        ],
    }


def project_from_record(record: dict) -> Project:
    prioritization = None
    if record["prioritization"] is not None:
        p = record["prioritization"]
        prioritization = PrioritizationResult(
            method=Method(p["method"]),
            provenance=Provenance(p["provenance"]),
            ranked=tuple(
                RankedStory(
                    story_id=r["story_id"],
                    rank=r["rank"],
                    score=_fraction(r["score"]),
                    bucket=None if r["bucket"] is None else Bucket(r["bucket"]),
                    allocation=_fraction(r["allocation"]),
                )
                for r in p["ranked"]
            ),
        )
    uml = None
    if record["uml"] is not None:
        u = record["uml"]
        uml = UmlArtifact(
            source=u["source"],
            encoded=u["encoded"],
            diagram_bytes=None if u["diagram_b16"] is None else bytes.fromhex(u["diagram_b16"]),
            diagram_media_type=u["diagram_media_type"],
            critique=u["critique"],
        )
    compliance = None
    if record["compliance"] is not None:
        c = record["compliance"]
        compliance = ComplianceReport(
            checklist_version=c["checklist_version"],
            llm_narrative=c["llm_narrative"],
            degraded=c["degraded"],
            findings=tuple(
                Finding(
                    rule_id=f["rule_id"],
                    severity=f["severity"],
                    subject=f["subject"],
                    detail=f["detail"],
                )
                for f in c["findings"]
            ),
        )
    return Project(
        id=record["id"],
        title=record["title"],
        requirements_text=record["requirements_text"],
        phase=Phase(record["phase"]),
        gate=GateStatus(record["gate"]),
        revision=record["revision"],
        version=record["version"],
        epics=tuple(
            Epic(id=e["id"], title=e["title"], description=e["description"])
            for e in record["epics"]
        ),
        stories=tuple(
            UserStory(
                id=s["id"],
                epic_id=s["epic_id"],
                narrative=s["narrative"],
                acceptance_criteria=tuple(s["acceptance_criteria"]),
                factors=None
                if s["factors"] is None
                else PriorityFactors(
                    business_value=s["factors"]["bv"],
                    time_criticality=s["factors"]["tc"],
                    risk_reduction=s["factors"]["rr"],
                    job_size=s["factors"]["js"],
                ),
            )
            for s in record["stories"]
        ),
        prioritization=prioritization,
        uml=uml,
        code_artifacts=tuple(
            CodeArtifact(
                method=GenMethod(a["method"]),
                narrative=a["narrative"],
                source_request_id=a["source_request_id"],
                blocks=tuple(
                    CodeBlock(language_label=b["language_label"], body=b["body"])
                    for b in a["blocks"]
                ),
            )
            for a in record["code_artifacts"]
        ),
        compliance=compliance,
        metrics=tuple(
            PhaseMetric(
                phase=Phase(m["phase"]),
                method_label=m["method_label"],
                duration_ms=m["duration_ms"],
                provider_label=m["provider_label"],
                timestamp=datetime.fromisoformat(m["timestamp"]),
            )
            for m in record["metrics"]
        ),
    )


def _canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _checksum(record: dict) -> str:
    return hashlib.sha256(_canonical_json(record).encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class ProjectStore:
    root: Path

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @property
    def _index_path(self) -> Path:
        return self.root / "index.json"

    def _read_index(self) -> dict[str, int]:
        if not self._index_path.is_file():
            return {}
        return json.loads(self._index_path.read_text(encoding="utf-8"))

    def _write_index(self, index: dict[str, int]) -> None:
        _atomic_write(self._index_path, json.dumps(index, sort_keys=True, indent=1))

    def latest_version(self, project_id: str) -> int | None:
        return self._read_index().get(project_id)

    def ids(self) -> list[str]:
        return sorted(self._read_index())

    def save(self, project: Project) -> None:
        """Persist one new version; stale versions are conflicts, not overwrites."""
        index = self._read_index()
        latest = index.get(project.id)
        if latest is None:
            if project.version < 1:
                raise VersionConflictError("new projects must start at version >= 1")
        elif project.version != latest + 1:
            raise VersionConflictError(
                f"project {project.id} is at version {latest}; "
                f"cannot save version {project.version}"
            )
        record = project_to_record(project)
        document = {"checksum": _checksum(record), "record": record}
        project_dir = self.root / project.id
        project_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(project_dir / f"{project.version}.json", json.dumps(document, indent=1))
        index[project.id] = project.version
        self._write_index(index)

    def load(self, project_id: str, version: int | None = None) -> Project:
        index = self._read_index()
        if project_id not in index:
            raise MissingProjectError(f"no project with id {project_id!r}")
        version = version if version is not None else index[project_id]
        path = self.root / project_id / f"{version}.json"
        if not path.is_file():
            raise MissingProjectError(f"project {project_id!r} has no version {version}")
        document = json.loads(path.read_text(encoding="utf-8"))
        record = document.get("record")
        if record is None or _checksum(record) != document.get("checksum"):
            raise CorruptRecordError(f"checksum mismatch in {path}")
        return project_from_record(record)


def save_project(project: Project, store: ProjectStore) -> None:
    store.save(project)


def load_project(project_id: str, store: ProjectStore) -> Project:
    return store.load(project_id)
