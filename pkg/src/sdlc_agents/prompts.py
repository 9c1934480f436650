"""Prompt template loading, placeholder substitution and conversations.

Templates are plain UTF-8 files named ``<id>.txt`` in a template
directory; placeholders use the ``{{name}}`` form and substitution is
literal, never recursive. Rendering with bindings that themselves
contain ``{{...}}`` inserts the text verbatim.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import SdlcError

log = logging.getLogger(__name__)

PLACEHOLDER_RE = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")
# Any other double-brace sequence is a template-authoring mistake.
MALFORMED_RE = re.compile(r"\{\{(?![A-Za-z_][A-Za-z0-9_]*\}\})")

TEMPLATE_IDS = (
    "agent_user_stories",
    "agent_wsjf",
    "agent_ahp",
    "agent_moscow",
    "agent_hundred_dollar",
    "agent_plantuml",
    "agent_backend",
    "agent_frontend",
    "agent_unit_test",
    "agent_e2e_test",
    "agent_compliance",
)


class TemplateNotFoundError(SdlcError):
    code = "template_not_found"


class TemplateSyntaxError(SdlcError):
    code = "template_syntax"


class MissingBindingError(SdlcError):
    code = "missing_binding"


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    required_placeholders: frozenset[str]


@dataclass
class Conversation:
    """Append-only message history of (role, content) pairs."""

    _messages: list[tuple[str, str]] = field(default_factory=list)

    def add(self, role: str, content: str) -> None:
        self._messages.append((role, content))

    @property
    def messages(self) -> tuple[tuple[str, str], ...]:
        return tuple(self._messages)


def default_template_root() -> Path:
    """Directory of the templates shipped with the package."""
    return Path(str(resources.files("sdlc_agents") / "templates"))


def parse_template(template_id: str, body: str) -> PromptTemplate:
    bad = MALFORMED_RE.search(body)
    if bad is not None:
        line = body.count("\n", 0, bad.start()) + 1
        raise TemplateSyntaxError(
            f"template {template_id!r} has malformed placeholder syntax on line {line}"
        )
    names = frozenset(PLACEHOLDER_RE.findall(body))
    return PromptTemplate(id=template_id, body=body, required_placeholders=names)


def load_template(template_id: str, template_root: Path | str | None = None) -> PromptTemplate:
    root = Path(template_root) if template_root is not None else default_template_root()
    path = root / f"{template_id}.txt"
    if not path.is_file():
        raise TemplateNotFoundError(f"no template file at {path}")
    return parse_template(template_id, path.read_text(encoding="utf-8"))


def render(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute every placeholder in one pass over the body.

    Inserted values are never rescanned, so a binding containing
    ``{{other}}`` comes through verbatim.
    """
    missing = sorted(template.required_placeholders - bindings.keys())
    if missing:
        raise MissingBindingError(
            f"template {template.id!r} missing bindings for: {', '.join(missing)}"
        )
    extra = sorted(bindings.keys() - template.required_placeholders)
    if extra:
        log.warning("template %r: ignoring extra bindings %s", template.id, extra)
    return PLACEHOLDER_RE.sub(lambda m: bindings[m.group(1)], template.body)


def fingerprint(template_id: str, bindings: dict[str, str]) -> str:
    """Stable request fingerprint: template id plus normalized-bindings hash.

    Mock scripts key canned replies on this value; normalization (sorted
    keys, stripped values) keeps it insensitive to binding order and
    incidental whitespace.
    """
    normalized = "\x1f".join(f"{k}={str(bindings[k]).strip()}" for k in sorted(bindings))
    digest = hashlib.sha256(normalized.encode("utf-8")).hexdigest()[:16]
    return f"{template_id}:{digest}"


class PromptLibrary:
    """Read-mostly template cache over one template directory."""

    def __init__(self, template_root: Path | str | None = None):
        self.root = Path(template_root) if template_root is not None else default_template_root()
        self._cache: dict[str, PromptTemplate] = {}

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self._cache:
            self._cache[template_id] = load_template(template_id, self.root)
        return self._cache[template_id]

    def render(self, template_id: str, bindings: dict[str, str]) -> tuple[str, str]:
        """Render a template; returns (prompt text, request fingerprint)."""
        text = render(self.get(template_id), bindings)
        return text, fingerprint(template_id, bindings)
