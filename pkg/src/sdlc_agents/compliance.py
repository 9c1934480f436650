"""Compliance agent: deterministic checklist plus an advisory LLM narrative.

Rules live in a versioned data file so they evolve without code
changes. Static findings are a pure function of the project snapshot;
the LLM layer only ever adds narrative on top and degrades to
static-only when the provider is unavailable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import SdlcError
from .gateway import ChatRequest, Provider, ProviderError
from .model import ComplianceReport, Finding, Project
from .prompts import PromptLibrary

SEVERITIES = ("info", "warning", "violation")
RULE_KINDS = ("code_regex", "story_guard")


class ChecklistError(SdlcError):
    code = "checklist"


class EmptyProjectError(SdlcError):
    code = "empty_project"


@dataclass(frozen=True)
class ChecklistRule:
    rule_id: str
    kind: str
    severity: str
    pattern: str
    message: str


@dataclass(frozen=True)
class Checklist:
    version: str
    rules: tuple[ChecklistRule, ...]

    @property
    def rule_ids(self) -> frozenset[str]:
        return frozenset(rule.rule_id for rule in self.rules)


def default_checklist_path() -> Path:
    return Path(str(resources.files("sdlc_agents") / "compliance_rules.txt"))


def load_checklist(path: Path | str | None = None) -> Checklist:
    """Parse the line-oriented rule file.

    Format: ``rule_id | kind | severity | pattern | message`` with ``#``
    comments. A ``story_guard`` pattern is ``trigger => required``: the
    rule fires when a story narrative matches the trigger and none of
    its acceptance criteria match the required pattern.
    """
    text = Path(path or default_checklist_path()).read_text(encoding="utf-8")
    version = ""
    rules = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("version"):
            version = stripped.split(None, 1)[1].strip()
            continue
        head = stripped.split("|", 3)
        if len(head) != 4:
            raise ChecklistError(f"rule file line {lineno}: expected 5 pipe-separated fields")
        tail = head[3].rsplit("|", 1)
        if len(tail) != 2:
            raise ChecklistError(f"rule file line {lineno}: expected 5 pipe-separated fields")
        rule = ChecklistRule(
            rule_id=head[0].strip(),
            kind=head[1].strip(),
            severity=head[2].strip(),
            pattern=tail[0].strip(),
            message=tail[1].strip(),
        )
        if rule.kind not in RULE_KINDS:
            raise ChecklistError(f"rule {rule.rule_id}: unknown kind {rule.kind!r}")
        if rule.severity not in SEVERITIES:
            raise ChecklistError(f"rule {rule.rule_id}: unknown severity {rule.severity!r}")
        rules.append(rule)
    if not version:
        raise ChecklistError("rule file declares no version line")
    return Checklist(version=version, rules=tuple(rules))


def _code_findings(rule: ChecklistRule, project: Project) -> list[Finding]:
    pattern = re.compile(rule.pattern)
    findings = []
    for artifact in project.code_artifacts:
        for index, block in enumerate(artifact.blocks, start=1):
            if pattern.search(block.body):
                findings.append(
                    Finding(
                        rule_id=rule.rule_id,
                        severity=rule.severity,
                        subject=f"code:{artifact.method.value}/{index}",
                        detail=rule.message,
                    )
                )
    return findings


def _story_findings(rule: ChecklistRule, project: Project) -> list[Finding]:
    if "=>" not in rule.pattern:
        raise ChecklistError(f"rule {rule.rule_id}: story_guard pattern needs 'trigger => required'")
    trigger_src, required_src = (part.strip() for part in rule.pattern.split("=>", 1))
    trigger = re.compile(trigger_src, re.IGNORECASE)
    required = re.compile(required_src, re.IGNORECASE)
    findings = []
    for story in project.stories:
        if not trigger.search(story.narrative):
            continue
        if any(required.search(criterion) for criterion in story.acceptance_criteria):
            continue
        findings.append(
            Finding(
                rule_id=rule.rule_id,
                severity=rule.severity,
                subject=f"story:{story.id}",
                detail=rule.message,
            )
        )
    return findings


def run_static_checklist(project: Project, checklist: Checklist | None = None) -> list[Finding]:
    """Apply every rule to the snapshot; pure and order-independent."""
    if not (project.stories or project.code_artifacts or project.uml):
        raise EmptyProjectError("project has no artifacts to review")
    checklist = checklist or load_checklist()
    findings: list[Finding] = []
    for rule in checklist.rules:
        if rule.kind == "code_regex":
            findings.extend(_code_findings(rule, project))
        else:
            findings.extend(_story_findings(rule, project))
    findings.sort(key=lambda f: (f.rule_id, f.subject))
    return findings


def format_findings(findings: list[Finding]) -> str:
    if not findings:
        return "(no findings)"
    return "\n".join(
        f"- [{f.severity}] {f.rule_id} on {f.subject}: {f.detail}" for f in findings
    )


def compliance_review(
    project: Project,
    provider: Provider,
    templates: PromptLibrary,
    checklist: Checklist | None = None,
    model_label: str = "gpt-3.5-turbo",
) -> ComplianceReport:
    """Static findings plus an LLM narrative; the narrative never removes findings.

    Provider failure degrades to a static-only report with the degraded
    flag set instead of failing the review.
    """
    checklist = checklist or load_checklist()
    findings = run_static_checklist(project, checklist)
    prompt, fp = templates.render(
        "agent_compliance",
        {"project_title": project.title, "findings": format_findings(findings)},
    )
    try:
        reply = provider.complete(
            ChatRequest(model_label=model_label, messages=(("user", prompt),), fingerprint=fp)
        )
        narrative = reply.content
        degraded = False
    except ProviderError:
        narrative = ""
        degraded = True
    return ComplianceReport(
        findings=tuple(findings),
        checklist_version=checklist.version,
        llm_narrative=narrative,
        degraded=degraded,
    )
