import pytest

from sdlc_agents.compliance import (
    EmptyProjectError,
    compliance_review,
    load_checklist,
    run_static_checklist,
)
from sdlc_agents.gateway import MockProvider, MockScript, MissingFingerprintError
from sdlc_agents.model import (
    CodeArtifact,
    CodeBlock,
    Epic,
    GenMethod,
    Project,
    UserStory,
)


def project_with(stories=(), code_bodies=()) -> Project:
    artifacts = tuple(
        CodeArtifact(
            method=GenMethod.BACKEND,
            blocks=(CodeBlock(language_label="python", body=body),),
        )
        for body in code_bodies
    )
    return Project(
        id="p-compliance",
        title="Login platform",
        requirements_text="login things",
        epics=(Epic(id="E1", title="General"),),
        stories=tuple(stories),
        code_artifacts=artifacts,
    )


@pytest.fixture(scope="module")
def checklist():
    return load_checklist()


class TestChecklistFile:
    def test_versioned(self, checklist):
        assert checklist.version == "1.0"

    def test_rule_ids_unique_enough(self, checklist):
        assert "hardcoded-credentials" in checklist.rule_ids
        assert "auth-data-handling-unspecified" in checklist.rule_ids

    def test_severities_closed_set(self, checklist):
        assert {rule.severity for rule in checklist.rules} <= {"info", "warning", "violation"}


class TestStaticChecklist:
    def test_listing1_password_map_flagged(self, fixtures_dir, checklist):
        listing = (fixtures_dir / "listing_backend_login.py.txt").read_text(encoding="utf-8")
        project = project_with(code_bodies=[listing])
        findings = run_static_checklist(project, checklist)
        credential_hits = [f for f in findings if f.rule_id == "hardcoded-credentials"]
        assert len(credential_hits) == 1
        assert credential_hits[0].severity == "violation"
        assert credential_hits[0].subject == "code:backend/1"

    def test_clean_project_has_no_findings(self, checklist):
        story = UserStory(
            id="S1", epic_id="E1", narrative="As a reviewer, I want to filter papers by year."
        )
        project = project_with(stories=[story], code_bodies=["def add(a, b):\n    return a + b"])
        assert run_static_checklist(project, checklist) == []

    def test_login_story_without_credential_criterion_warned(self, checklist):
        story = UserStory(
            id="S1", epic_id="E1", narrative="As a user, I want a login feature for my account."
        )
        findings = run_static_checklist(project_with(stories=[story]), checklist)
        assert any(
            f.rule_id == "auth-data-handling-unspecified" and f.severity == "warning"
            for f in findings
        )

    def test_login_story_with_credential_criterion_clean(self, checklist):
        story = UserStory(
            id="S1",
            epic_id="E1",
            narrative="As a user, I want a login feature for my account.",
            acceptance_criteria=("Passwords are stored as salted hashes.",),
        )
        findings = run_static_checklist(project_with(stories=[story]), checklist)
        assert not any(f.rule_id == "auth-data-handling-unspecified" for f in findings)

    def test_hardcoded_secret_flagged(self, checklist):
        project = project_with(code_bodies=['API_KEY = "sk-123456"\n'])
        findings = run_static_checklist(project, checklist)
        assert any(f.rule_id == "hardcoded-endpoint-secret" for f in findings)

    def test_empty_project_rejected(self, checklist):
        with pytest.raises(EmptyProjectError):
            run_static_checklist(project_with(), checklist)

    def test_pure_function_of_snapshot(self, fixtures_dir, checklist):
        listing = (fixtures_dir / "listing_backend_login.py.txt").read_text(encoding="utf-8")
        project = project_with(code_bodies=[listing])
        assert run_static_checklist(project, checklist) == run_static_checklist(project, checklist)


class TestComplianceReview:
    def test_violation_plus_narrative(self, fixtures_dir, mock_provider, checklist):
        listing = (fixtures_dir / "listing_backend_login.py.txt").read_text(encoding="utf-8")
        project = project_with(code_bodies=[listing])
        report = compliance_review(project, mock_provider, __import__("sdlc_agents.prompts", fromlist=["PromptLibrary"]).PromptLibrary(), checklist)
        assert any(f.rule_id == "hardcoded-credentials" for f in report.findings)
        assert report.llm_narrative
        assert not report.degraded

    def test_provider_failure_degrades_not_fails(self, fixtures_dir, checklist, templates):
        listing = (fixtures_dir / "listing_backend_login.py.txt").read_text(encoding="utf-8")
        project = project_with(code_bodies=[listing])

        class FailingProvider:
            label = "down"

            def complete(self, request):
                raise MissingFingerprintError("backend not reachable")

        report = compliance_review(project, FailingProvider(), templates, checklist)
        assert report.degraded
        assert report.llm_narrative == ""
        # violation count identical to the healthy path
        healthy = compliance_review(
            project,
            MockProvider(MockScript(entries={"agent_compliance:*": "text"})),
            templates,
            checklist,
        )
        violations = lambda rep: [f for f in rep.findings if f.severity == "violation"]
        assert len(violations(report)) == len(violations(healthy))

    def test_empty_project_precondition(self, mock_provider, templates, checklist):
        with pytest.raises(EmptyProjectError):
            compliance_review(project_with(), mock_provider, templates, checklist)
