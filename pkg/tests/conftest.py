import json
from pathlib import Path

import pytest

from sdlc_agents.gateway import MockProvider, MockScript
from sdlc_agents.model import Epic, PriorityFactors, UserStory
from sdlc_agents.prompts import PromptLibrary

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURES = REPO_ROOT / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def mock_script() -> MockScript:
    return MockScript.load(FIXTURES / "mock_script.json")


@pytest.fixture(scope="session")
def mock_provider(mock_script) -> MockProvider:
    return MockProvider(mock_script)


@pytest.fixture(scope="session")
def templates() -> PromptLibrary:
    return PromptLibrary()


@pytest.fixture(scope="session")
def golden_rows() -> list[dict]:
    """The six golden stories with their BV/JS/RR/TC factors."""
    raw = json.loads((FIXTURES / "golden_stories.json").read_text(encoding="utf-8"))
    return raw["stories"]


@pytest.fixture()
def golden_stories(golden_rows) -> tuple[list[UserStory], list[Epic]]:
    epic = Epic(id="E1", title="Systematic review platform")
    stories = [
        UserStory(
            id=row["id"],
            epic_id=epic.id,
            narrative=row["narrative"],
            factors=PriorityFactors(
                business_value=row["bv"],
                time_criticality=row["tc"],
                risk_reduction=row["rr"],
                job_size=row["js"],
            ),
        )
        for row in golden_rows
    ]
    return stories, [epic]
