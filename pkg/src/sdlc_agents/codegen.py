"""Code generation agent: method-dispatched generation and block extraction.

Replies are split into triple-backtick fenced code blocks and the prose
between them. The split is lossless: the ordered segments carry every
line of the reply, so re-fencing the blocks between the narrative parts
reassembles the original document.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass

from .errors import SdlcError
from .gateway import ChatRequest, Provider, ProviderConfig
from .model import CodeArtifact, CodeBlock, GenMethod
from .prompts import PromptLibrary

METHOD_TEMPLATES = {
    GenMethod.BACKEND: "agent_backend",
    GenMethod.FRONTEND: "agent_frontend",
    GenMethod.UNIT_TEST: "agent_unit_test",
    GenMethod.E2E_TEST: "agent_e2e_test",
}

# Download extensions per fence language tag; anything else is .txt.
LANGUAGE_EXTENSIONS = {
    "python": "py",
    "py": "py",
    "javascript": "js",
    "js": "js",
    "jsx": "jsx",
    "typescript": "ts",
    "ts": "ts",
    "tsx": "tsx",
    "java": "java",
    "html": "html",
    "css": "css",
    "json": "json",
    "yaml": "yaml",
    "sql": "sql",
    "bash": "sh",
    "sh": "sh",
}


class ConfigurationError(SdlcError):
    code = "configuration"


class UnterminatedFenceError(SdlcError):
    code = "unterminated_fence"

    def __init__(self, message: str, open_line: int):
        super().__init__(message, detail={"open_fence_line": open_line})
        self.open_line = open_line


class NoCodeBlocksError(SdlcError):
    code = "no_code_blocks"

    def __init__(self, message: str, narrative: str):
        super().__init__(message, detail={"narrative": narrative})
        self.narrative = narrative


@dataclass(frozen=True)
class GenerationRequest:
    content: str
    model_label: str
    method: GenMethod

    def __post_init__(self):
        if not self.content.strip():
            raise ValueError("content must be non-empty")


@dataclass(frozen=True)
class ReplySegment:
    kind: str  # "text" | "block"
    lines: tuple[str, ...]
    fence_tag: str = ""  # blocks only, as written on the opening fence


@dataclass(frozen=True)
class ParsedReply:
    segments: tuple[ReplySegment, ...]

    @property
    def blocks(self) -> tuple[CodeBlock, ...]:
        return tuple(
            CodeBlock(
                language_label=(segment.fence_tag.split() or ["unknown"])[0] or "unknown",
                body="\n".join(segment.lines),
            )
            for segment in self.segments
            if segment.kind == "block"
        )

    @property
    def narrative(self) -> str:
        parts = [
            "\n".join(segment.lines)
            for segment in self.segments
            if segment.kind == "text"
        ]
        return "\n".join(part for part in parts if part.strip()).strip()

    def reassemble(self) -> str:
        """Inverse of the split, for the lossless-split check."""
        lines: list[str] = []
        for segment in self.segments:
            if segment.kind == "block":
                lines.append(f"```{segment.fence_tag}")
                lines.extend(segment.lines)
                lines.append("```")
            else:
                lines.extend(segment.lines)
        return "\n".join(lines)


def parse_code_reply(text: str) -> ParsedReply:
    """Split a reply into fenced blocks and surrounding narrative.

    Fences do not nest: the first closing fence ends a block. An open
    fence with no closer is an error carrying its line number.
    """
    segments: list[ReplySegment] = []
    current: list[str] = []
    fence_tag = ""
    open_line = 0
    in_block = False
    # split("\n") rather than splitlines(): a trailing newline stays a real
    # (empty) line, keeping the split lossless.
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.lstrip().startswith("```"):
            if in_block:
                segments.append(ReplySegment(kind="block", lines=tuple(current), fence_tag=fence_tag))
            else:
                segments.append(ReplySegment(kind="text", lines=tuple(current)))
                fence_tag = line.lstrip()[3:].strip()
                open_line = lineno
            current = []
            in_block = not in_block
        else:
            current.append(line)
    if in_block:
        raise UnterminatedFenceError(
            f"code fence opened on line {open_line} is never closed", open_line=open_line
        )
    segments.append(ReplySegment(kind="text", lines=tuple(current)))
    return ParsedReply(segments=tuple(segments))


def extract_code_blocks(text: str) -> list[tuple[str, str]]:
    """Fenced blocks as (language_label, body) pairs, in order."""
    return [(block.language_label, block.body) for block in parse_code_reply(text).blocks]


def select_endpoint(
    model_label: str,
    method: GenMethod,
    providers: dict[str, ProviderConfig],
) -> tuple[str, ProviderConfig]:
    """Template id and provider config for a (model, method) pair."""
    if method not in METHOD_TEMPLATES:
        raise ConfigurationError(f"unknown generation method {method!r}")
    if model_label not in providers:
        raise ConfigurationError(
            f"no provider configured for model {model_label!r}; "
            f"known: {', '.join(sorted(providers))}"
        )
    return METHOD_TEMPLATES[method], providers[model_label]


def generate_artifact(
    request: GenerationRequest,
    provider: Provider,
    templates: PromptLibrary,
) -> CodeArtifact:
    """Run one generation round trip and package the reply as an artifact."""
    prompt, fp = templates.render(METHOD_TEMPLATES[request.method], {"content": request.content})
    reply = provider.complete(
        ChatRequest(
            model_label=request.model_label, messages=(("user", prompt),), fingerprint=fp
        )
    )
    parsed = parse_code_reply(reply.content)
    if not parsed.blocks:
        raise NoCodeBlocksError(
            f"reply for method {request.method.value} contains no code blocks",
            narrative=parsed.narrative,
        )
    return CodeArtifact(
        method=request.method,
        blocks=parsed.blocks,
        narrative=parsed.narrative,
        source_request_id=uuid.uuid5(uuid.NAMESPACE_OID, fp).hex[:12],
    )


def extension_for_language(language_label: str) -> str:
    return LANGUAGE_EXTENSIONS.get(language_label.lower(), "txt")
