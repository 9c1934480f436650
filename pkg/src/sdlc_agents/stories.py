"""Requirements agent: raw objective text to epics, stories and CSV.

The reply grammar is the one the story template demands: ``Epic:``
heading lines, numbered story lines, optionally followed by indented
dash bullets holding acceptance criteria. Parsing never invents
content; every narrative and criterion is a substring of the reply.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .errors import SdlcError
from .gateway import ChatRequest, Provider
from .model import Epic, Method, PrioritizationResult, UserStory
from .prioritization import ResponseParseError, round_half_even
from .prompts import PromptLibrary

CSV_HEADER = ["rank", "story_id", "epic", "narrative", "method", "bv", "tc", "rr", "js", "score"]

_EPIC_RE = re.compile(r"^\s*#{0,6}\s*Epic\s*[:\-]\s*(.+?)\s*$", re.IGNORECASE)
_STORY_RE = re.compile(r"^\s*(\d+)\s*[.):]\s*(.+?)\s*$")
_CRITERION_RE = re.compile(r"^\s+[-*]\s+(.+?)\s*$")


class EmptyObjectiveError(SdlcError):
    code = "empty_objective"


class EmptyResultError(SdlcError):
    code = "empty_result"


@dataclass(frozen=True)
class StoryGenerationSpec:
    objective: str
    num_stories: int = 10
    model_label: str = "gpt-3.5-turbo"

    def __post_init__(self):
        if not 1 <= self.num_stories <= 100:
            raise ValueError(f"num_stories must be in [1,100], got {self.num_stories}")


@dataclass(frozen=True)
class StoryGenerationResult:
    groups: tuple[tuple[Epic, tuple[UserStory, ...]], ...]
    shortfall: int = 0

    @property
    def epics(self) -> tuple[Epic, ...]:
        return tuple(epic for epic, _ in self.groups)

    @property
    def stories(self) -> tuple[UserStory, ...]:
        return tuple(story for _, stories in self.groups for story in stories)


def parse_story_response(text: str) -> list[tuple[Epic, list[UserStory]]]:
    """Recognize the epic/story layout; zero stories is a parse error.

    Stories appearing before any epic heading fall under an implicit
    "General" epic.
    """
    groups: list[tuple[Epic, list[UserStory]]] = []
    current_stories: list[UserStory] | None = None
    epic_count = 0
    story_count = 0
    last_story_criteria: list[str] | None = None

    def open_epic(title: str) -> list[UserStory]:
        nonlocal epic_count
        epic_count += 1
        stories: list[UserStory] = []
        groups.append((Epic(id=f"E{epic_count}", title=title), stories))
        return stories

    for line in text.splitlines():
        epic_match = _EPIC_RE.match(line)
        if epic_match:
            current_stories = open_epic(epic_match.group(1))
            last_story_criteria = None
            continue
        story_match = _STORY_RE.match(line)
        if story_match:
            if current_stories is None:
                current_stories = open_epic("General")
            story_count += 1
            criteria: list[str] = []
            current_stories.append(
                UserStory(
                    id=f"S{story_count}",
                    epic_id=groups[-1][0].id,
                    narrative=story_match.group(2),
                    acceptance_criteria=(),
                )
            )
            last_story_criteria = criteria
            continue
        criterion_match = _CRITERION_RE.match(line)
        if criterion_match and last_story_criteria is not None and current_stories:
            last_story_criteria.append(criterion_match.group(1))
            story = current_stories[-1]
            current_stories[-1] = UserStory(
                id=story.id,
                epic_id=story.epic_id,
                narrative=story.narrative,
                acceptance_criteria=tuple(last_story_criteria),
            )
            continue
        if line.strip():
            last_story_criteria = None

    if story_count == 0:
        raise ResponseParseError("no story lines recognized in reply", raw_text=text)
    return [(epic, stories) for epic, stories in groups if stories]


def generate_user_stories(
    spec: StoryGenerationSpec, provider: Provider, templates: PromptLibrary
) -> StoryGenerationResult:
    """Run the story-generation round trip against a provider.

    If the reply parses to fewer stories than requested the shortfall is
    reported on the result rather than raised; more stories than
    requested are truncated so the total never exceeds the request.
    """
    if not spec.objective.strip():
        raise EmptyObjectiveError("objective text is empty")
    prompt, fp = templates.render(
        "agent_user_stories",
        {"objective": spec.objective, "num_stories": str(spec.num_stories)},
    )
    reply = provider.complete(
        ChatRequest(
            model_label=spec.model_label,
            messages=(("user", prompt),),
            fingerprint=fp,
        )
    )
    groups = parse_story_response(reply.content)
    kept: list[tuple[Epic, tuple[UserStory, ...]]] = []
    remaining = spec.num_stories
    for epic, stories in groups:
        if remaining <= 0:
            break
        take = stories[:remaining]
        remaining -= len(take)
        kept.append((epic, tuple(take)))
    total = sum(len(stories) for _, stories in kept)
    return StoryGenerationResult(
        groups=tuple(kept), shortfall=max(0, spec.num_stories - total)
    )


def export_csv(
    result: PrioritizationResult,
    stories: list[UserStory] | tuple[UserStory, ...],
    epics: list[Epic] | tuple[Epic, ...],
) -> bytes:
    """RFC 4180 export of a prioritization outcome, ranks ascending.

    WSJF rows carry the four factors; the score column holds the numeric
    score (or allocation) at two decimals and stays empty for the
    categorical MoSCoW method, whose bucket is folded into the method
    column as ``moscow:<bucket>``.
    """
    if not result.ranked:
        raise EmptyResultError("prioritization result has no rows to export")
    stories_by_id = {story.id: story for story in stories}
    epic_titles = {epic.id: epic.title for epic in epics}
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(CSV_HEADER)
    for row in sorted(result.ranked, key=lambda r: r.rank):
        story = stories_by_id.get(row.story_id)
        if story is None:
            raise EmptyResultError(f"ranked story {row.story_id} not among provided stories")
        method = result.method.value
        score = ""
        bv = tc = rr = js = ""
        if result.method is Method.MOSCOW:
            method = f"moscow:{row.bucket.value}"
        elif result.method is Method.HUNDRED_DOLLAR:
            score = round_half_even(row.allocation)
        else:
            score = round_half_even(row.score)
        if result.method is Method.WSJF and story.factors is not None:
            factors = story.factors
            bv, tc, rr, js = (
                str(factors.business_value),
                str(factors.time_criticality),
                str(factors.risk_reduction),
                str(factors.job_size),
            )
        writer.writerow(
            [
                row.rank,
                story.id,
                epic_titles.get(story.epic_id, ""),
                story.narrative,
                method,
                bv,
                tc,
                rr,
                js,
                score,
            ]
        )
    return buffer.getvalue().encode("utf-8")
