"""Backlog prioritization: WSJF, AHP, MoSCoW and the hundred-dollar test.

Scoring math is exact: WSJF scores and point allocations are
``Fraction`` values, and rounding to two decimals happens only at
display or CSV export (half-to-even). AHP weights are floating point by
nature (geometric means) and carry their own tolerances.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import SdlcError
from .model import (
    Bucket,
    Method,
    PriorityFactors,
    PrioritizationResult,
    Provenance,
    RankedStory,
    UserStory,
)
from .prompts import PromptLibrary

# Standard random-index table for AHP consistency ratios, n = 2..10.
RANDOM_INDEX = {2: 0.0, 3: 0.58, 4: 0.90, 5: 1.12, 6: 1.24, 7: 1.32, 8: 1.41, 9: 1.45, 10: 1.49}

METHOD_TEMPLATES = {
    Method.WSJF: "agent_wsjf",
    Method.AHP: "agent_ahp",
    Method.MOSCOW: "agent_moscow",
    Method.HUNDRED_DOLLAR: "agent_hundred_dollar",
}

BUCKET_ALIASES = {
    "must": Bucket.MUST,
    "should": Bucket.SHOULD,
    "could": Bucket.COULD,
    "wont": Bucket.WONT,
    "won't": Bucket.WONT,
    "would": Bucket.WONT,
}

BUCKET_ORDER = {Bucket.MUST: 0, Bucket.SHOULD: 1, Bucket.COULD: 2, Bucket.WONT: 3}


class UnknownMethodError(SdlcError):
    code = "unknown_method"


class FactorDomainError(SdlcError):
    code = "factor_domain"


class MatrixInvariantError(SdlcError):
    code = "matrix_invariant"


class ResponseParseError(SdlcError):
    """LLM reply did not match the grammar the prompt demanded."""

    code = "parse_failure"

    def __init__(self, message: str, raw_text: str):
        super().__init__(message, detail={"raw_text": raw_text})
        self.raw_text = raw_text


def parse_method(name: str) -> Method:
    try:
        return Method(name)
    except ValueError:
        known = ", ".join(m.value for m in Method)
        raise UnknownMethodError(f"unknown prioritization method {name!r}; known: {known}")


def wsjf_score(factors: PriorityFactors) -> Fraction:
    """Cost of delay (BV + TC + RR) over job size, as an exact rational."""
    if factors.job_size < 1:
        raise FactorDomainError(f"job_size must be >= 1, got {factors.job_size}")
    cost_of_delay = factors.business_value + factors.time_criticality + factors.risk_reduction
    return Fraction(cost_of_delay, factors.job_size)


def round_half_even(value: Fraction, places: int = 2) -> str:
    """Format an exact rational at ``places`` decimals, ties to even."""
    scale = 10**places
    scaled = value * scale
    floor = scaled.numerator // scaled.denominator
    remainder = scaled - floor
    if remainder > Fraction(1, 2) or (remainder == Fraction(1, 2) and floor % 2 != 0):
        floor += 1
    sign = "-" if floor < 0 else ""
    units = abs(floor)
    return f"{sign}{units // scale}.{units % scale:0{places}d}"


def prioritize_wsjf(
    stories: list[UserStory], provenance: Provenance = Provenance.LLM_SUGGESTED
) -> PrioritizationResult:
    """Rank by WSJF score descending; ties keep input order."""
    for story in stories:
        if story.factors is None:
            raise FactorDomainError(f"story {story.id} has no priority factors")
    scored = [(story, wsjf_score(story.factors)) for story in stories]
    ordering = sorted(range(len(scored)), key=lambda i: (-scored[i][1], i))
    ranked = tuple(
        RankedStory(story_id=scored[i][0].id, rank=rank, score=scored[i][1])
        for rank, i in enumerate(ordering, start=1)
    )
    return PrioritizationResult(method=Method.WSJF, ranked=ranked, provenance=provenance)


@dataclass(frozen=True)
class AhpMatrix:
    """Reciprocal pairwise-comparison matrix with unit diagonal."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        if n < 2:
            raise MatrixInvariantError("comparison matrix needs n >= 2")
        for i, row in enumerate(self.entries):
            if len(row) != n:
                raise MatrixInvariantError(f"row {i} has {len(row)} entries, expected {n}")
            for j, value in enumerate(row):
                if value <= 0:
                    raise MatrixInvariantError(f"entry ({i},{j}) must be positive, got {value}")
        for i in range(n):
            if self.entries[i][i] != 1:
                raise MatrixInvariantError(f"diagonal entry ({i},{i}) must be 1")
            for j in range(i + 1, n):
                product = float(self.entries[i][j] * self.entries[j][i])
                if abs(product - 1.0) > 1e-9:
                    raise MatrixInvariantError(
                        f"entries ({i},{j}) and ({j},{i}) are not reciprocal"
                    )

    @property
    def n(self) -> int:
        return len(self.entries)


def ahp_priorities(matrix: AhpMatrix) -> list[float]:
    """Geometric-mean weights, normalized to sum 1.

    On a perfectly consistent matrix this coincides with the principal
    eigenvector.
    """
    geomeans = [
        math.exp(sum(math.log(value) for value in row) / matrix.n) for row in matrix.entries
    ]
    total = sum(geomeans)
    return [g / total for g in geomeans]


def ahp_consistency_ratio(matrix: AhpMatrix) -> float:
    """CR = CI / RI with lambda_max estimated from the weight vector."""
    n = matrix.n
    if n not in RANDOM_INDEX:
        raise MatrixInvariantError(f"consistency ratio defined for 2 <= n <= 10, got n={n}")
    if n == 2:
        return 0.0
    weights = ahp_priorities(matrix)
    lambda_max = (
        sum(
            sum(float(matrix.entries[i][j]) * weights[j] for j in range(n)) / weights[i]
            for i in range(n)
        )
        / n
    )
    consistency_index = (lambda_max - n) / (n - 1)
    return consistency_index / RANDOM_INDEX[n]


def prioritize_ahp(
    stories: list[UserStory],
    matrix: AhpMatrix,
    provenance: Provenance = Provenance.LLM_SUGGESTED,
) -> PrioritizationResult:
    if matrix.n != len(stories):
        raise MatrixInvariantError(
            f"matrix is {matrix.n}x{matrix.n} but there are {len(stories)} stories"
        )
    weights = ahp_priorities(matrix)
    ordering = sorted(range(len(stories)), key=lambda i: (-weights[i], i))
    ranked = tuple(
        RankedStory(
            story_id=stories[i].id,
            rank=rank,
            score=Fraction(weights[i]).limit_denominator(10**9),
        )
        for rank, i in enumerate(ordering, start=1)
    )
    return PrioritizationResult(method=Method.AHP, ranked=ranked, provenance=provenance)


def hundred_dollar_normalize(allocations: list[Fraction]) -> list[Fraction]:
    """Scale non-negative allocations so they sum to exactly 100.

    Proportions are preserved by exact rational scaling; the result is
    then snapped to 0.01 granularity with largest-remainder
    apportionment so the total stays exactly 100. Equal remainders give
    the leftover cent to the later item.
    """
    if any(a < 0 for a in allocations):
        raise FactorDomainError("allocations must be non-negative")
    total = sum(allocations)
    if total == 0:
        raise FactorDomainError("at least one allocation must be positive")
    scaled_cents = [a * 10_000 / total for a in allocations]
    floors = [s.numerator // s.denominator for s in scaled_cents]
    remainders = [s - f for s, f in zip(scaled_cents, floors)]
    shortfall = 10_000 - sum(floors)
    by_remainder = sorted(range(len(allocations)), key=lambda i: (-remainders[i], -i))
    cents = list(floors)
    for i in by_remainder[:shortfall]:
        cents[i] += 1
    return [Fraction(c, 100) for c in cents]


def prioritize_hundred_dollar(
    stories: list[UserStory],
    allocations: list[Fraction],
    provenance: Provenance = Provenance.LLM_SUGGESTED,
) -> PrioritizationResult:
    if len(allocations) != len(stories):
        raise FactorDomainError(
            f"{len(allocations)} allocations for {len(stories)} stories"
        )
    normalized = hundred_dollar_normalize(allocations)
    ordering = sorted(range(len(stories)), key=lambda i: (-normalized[i], i))
    ranked = tuple(
        RankedStory(story_id=stories[i].id, rank=rank, allocation=normalized[i])
        for rank, i in enumerate(ordering, start=1)
    )
    return PrioritizationResult(
        method=Method.HUNDRED_DOLLAR, ranked=ranked, provenance=provenance
    )


def prioritize_moscow(
    stories: list[UserStory],
    buckets: list[Bucket],
    provenance: Provenance = Provenance.LLM_SUGGESTED,
) -> PrioritizationResult:
    if len(buckets) != len(stories):
        raise FactorDomainError(f"{len(buckets)} buckets for {len(stories)} stories")
    ordering = sorted(range(len(stories)), key=lambda i: (BUCKET_ORDER[buckets[i]], i))
    ranked = tuple(
        RankedStory(story_id=stories[i].id, rank=rank, bucket=buckets[i])
        for rank, i in enumerate(ordering, start=1)
    )
    return PrioritizationResult(method=Method.MOSCOW, ranked=ranked, provenance=provenance)


def story_listing(stories: list[UserStory]) -> str:
    """Stable numbered listing used inside every prioritization prompt."""
    return "\n".join(f"{i}. {story.narrative}" for i, story in enumerate(stories, start=1))


def construct_prioritization_prompt(
    method: Method, stories: list[UserStory], templates: PromptLibrary
) -> tuple[str, str]:
    """Render the method's template; returns (prompt, fingerprint)."""
    if not stories:
        raise FactorDomainError("cannot build a prioritization prompt with no stories")
    if method not in METHOD_TEMPLATES:
        raise UnknownMethodError(f"unknown prioritization method {method!r}")
    return templates.render(METHOD_TEMPLATES[method], {"stories": story_listing(stories)})


_WSJF_LINE_RE = re.compile(r"^\s*(\d+)\s*[.:)\]]?\s*(.*)$")
_FACTOR_RE = re.compile(r"\b(BV|TC|RR|JS)\s*[=:]\s*(\d+)", re.IGNORECASE)
_INDEXED_LINE_RE = re.compile(r"^\s*(\d+)\s*[.:)\]]\s*(.+?)\s*$")
_FRACTION_RE = re.compile(r"^\d+(?:\.\d+)?(?:/\d+(?:\.\d+)?)?$")


def _parse_fraction(token: str) -> Fraction:
    if "/" in token:
        num, den = token.split("/", 1)
        return Fraction(Fraction(num), Fraction(den))
    return Fraction(token)


def parse_wsjf_response(text: str, num_stories: int) -> list[PriorityFactors]:
    """Extract one BV/TC/RR/JS quadruple per story, in story order."""
    found: dict[int, PriorityFactors] = {}
    for line in text.splitlines():
        match = _WSJF_LINE_RE.match(line)
        if not match:
            continue
        index = int(match.group(1))
        pairs = {key.upper(): int(val) for key, val in _FACTOR_RE.findall(match.group(2))}
        if set(pairs) != {"BV", "TC", "RR", "JS"}:
            continue
        if not 1 <= index <= num_stories:
            raise ResponseParseError(
                f"factor line references story {index}, not in the prompt (1..{num_stories})",
                raw_text=text,
            )
        if index in found:
            raise ResponseParseError(f"duplicate factor line for story {index}", raw_text=text)
        out_of_range = [k for k, v in pairs.items() if not 1 <= v <= 10]
        if out_of_range:
            raise ResponseParseError(
                f"story {index}: factors out of [1,10]: {', '.join(out_of_range)}",
                raw_text=text,
            )
        found[index] = PriorityFactors(
            business_value=pairs["BV"],
            time_criticality=pairs["TC"],
            risk_reduction=pairs["RR"],
            job_size=pairs["JS"],
        )
    if len(found) != num_stories:
        raise ResponseParseError(
            f"reply covers {len(found)} of {num_stories} stories", raw_text=text
        )
    return [found[i] for i in range(1, num_stories + 1)]


def parse_ahp_response(text: str, num_stories: int) -> AhpMatrix:
    """Extract an n x n matrix given as one row per line."""
    rows = []
    for line in text.splitlines():
        tokens = [t for t in re.split(r"[,\s]+", line.strip()) if t]
        if len(tokens) == num_stories and all(_FRACTION_RE.match(t) for t in tokens):
            rows.append(tuple(_parse_fraction(t) for t in tokens))
    if len(rows) != num_stories:
        raise ResponseParseError(
            f"expected a {num_stories}x{num_stories} matrix, found {len(rows)} rows",
            raw_text=text,
        )
    try:
        return AhpMatrix(entries=tuple(rows))
    except MatrixInvariantError as exc:
        raise ResponseParseError(f"reply matrix invalid: {exc}", raw_text=text)


def parse_moscow_response(text: str, num_stories: int) -> list[Bucket]:
    found: dict[int, Bucket] = {}
    for line in text.splitlines():
        match = _INDEXED_LINE_RE.match(line)
        if not match:
            continue
        index = int(match.group(1))
        label = match.group(2).strip().rstrip(".").lower()
        if label not in BUCKET_ALIASES:
            raise ResponseParseError(f"unknown bucket label {match.group(2)!r}", raw_text=text)
        if not 1 <= index <= num_stories:
            raise ResponseParseError(
                f"bucket line references story {index}, not in the prompt", raw_text=text
            )
        if index in found:
            raise ResponseParseError(f"duplicate bucket line for story {index}", raw_text=text)
        found[index] = BUCKET_ALIASES[label]
    if len(found) != num_stories:
        raise ResponseParseError(
            f"reply covers {len(found)} of {num_stories} stories", raw_text=text
        )
    return [found[i] for i in range(1, num_stories + 1)]


def parse_hundred_dollar_response(text: str, num_stories: int) -> list[Fraction]:
    found: dict[int, Fraction] = {}
    for line in text.splitlines():
        match = _INDEXED_LINE_RE.match(line)
        if not match:
            continue
        token = match.group(2).strip().rstrip("$ ").strip()
        if not _FRACTION_RE.match(token):
            continue
        index = int(match.group(1))
        if not 1 <= index <= num_stories:
            raise ResponseParseError(
                f"allocation line references story {index}, not in the prompt", raw_text=text
            )
        if index in found:
            raise ResponseParseError(f"duplicate allocation for story {index}", raw_text=text)
        value = _parse_fraction(token)
        if value < 0:
            raise ResponseParseError(f"story {index}: negative allocation", raw_text=text)
        found[index] = value
    if len(found) != num_stories:
        raise ResponseParseError(
            f"reply covers {len(found)} of {num_stories} stories", raw_text=text
        )
    return [found[i] for i in range(1, num_stories + 1)]


def parse_prioritization_response(method: Method, text: str, num_stories: int):
    if method is Method.WSJF:
        return parse_wsjf_response(text, num_stories)
    if method is Method.AHP:
        return parse_ahp_response(text, num_stories)
    if method is Method.MOSCOW:
        return parse_moscow_response(text, num_stories)
    if method is Method.HUNDRED_DOLLAR:
        return parse_hundred_dollar_response(text, num_stories)
    raise UnknownMethodError(f"unknown prioritization method {method!r}")
