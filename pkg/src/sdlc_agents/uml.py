"""Architect agent: UML extraction, PlantUML text encoding and rendering.

The encoding is the PlantUML URL scheme: raw DEFLATE of the UTF-8
source, then the bit stream mapped six bits at a time onto the
64-symbol alphabet ``0-9 A-Z a-z - _``. We emit the headerless form and
accept an optional ``~1`` prefix when decoding.
"""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
import zlib

import httpx

from .errors import SdlcError
from .gateway import ChatRequest, Provider
from .model import UmlArtifact
from .prompts import PromptLibrary

log = logging.getLogger(__name__)

PLANTUML_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz-_"
_DECODE_TABLE = {symbol: index for index, symbol in enumerate(PLANTUML_ALPHABET)}
ENCODED_RE = re.compile(r"^[0-9A-Za-z\-_]*$")

_CRITIQUE_RE = re.compile(r"^\s*#{0,6}\s*Critique\b[:\s]*$|^\s*#{0,6}\s*Critique\s*:", re.IGNORECASE)


class UmlExtractionError(SdlcError):
    code = "uml_extraction"

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message, detail={"raw_text": raw_text} if raw_text else None)
        self.raw_text = raw_text


class RenderError(SdlcError):
    code = "render_failure"


class RenderTransportError(RenderError):
    code = "render_unreachable"


def extract_uml_block(text: str) -> str:
    """Content strictly between the first @startuml line and the next @enduml.

    Leading and trailing blank lines are trimmed from the block. A
    second complete block is ignored with a warning; marker-order
    problems are errors.
    """
    lines = text.splitlines()
    start = end = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if stripped.startswith("@enduml") and start is None:
            raise UmlExtractionError("@enduml appears before any @startuml", raw_text=text)
        if stripped.startswith("@startuml") and start is None:
            start = i
            continue
        if stripped.startswith("@enduml") and start is not None:
            end = i
            break
    if start is None:
        raise UmlExtractionError("no @startuml marker in reply", raw_text=text)
    if end is None:
        raise UmlExtractionError("@startuml without a closing @enduml", raw_text=text)
    if any(line.strip().startswith("@startuml") for line in lines[end + 1 :]):
        log.warning("reply contains more than one UML block; using the first")
    block = lines[start + 1 : end]
    while block and not block[0].strip():
        block.pop(0)
    while block and not block[-1].strip():
        block.pop()
    return "\n".join(block)


def extract_critique(text: str) -> str:
    """Commentary under a Critique heading, if the reply has one."""
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if _CRITIQUE_RE.match(line):
            remainder = line.split(":", 1)[1].strip() if ":" in line else ""
            tail = [remainder] if remainder else []
            tail += lines[i + 1 :]
            return "\n".join(tail).strip()
    return ""


def _encode_sextets(data: bytes) -> str:
    """Map the byte stream onto the alphabet, six bits at a time.

    Output length is ceil(len(data) * 8 / 6); the final partial group is
    zero-padded.
    """
    out = []
    for i in range(0, len(data), 3):
        chunk = data[i : i + 3]
        b1 = chunk[0]
        b2 = chunk[1] if len(chunk) > 1 else 0
        b3 = chunk[2] if len(chunk) > 2 else 0
        sextets = [b1 >> 2, ((b1 & 0x3) << 4) | (b2 >> 4), ((b2 & 0xF) << 2) | (b3 >> 6), b3 & 0x3F]
        keep = {1: 2, 2: 3, 3: 4}[len(chunk)]
        out.extend(PLANTUML_ALPHABET[s] for s in sextets[:keep])
    return "".join(out)


def _decode_sextets(encoded: str) -> bytes:
    bits = 0
    bit_count = 0
    out = bytearray()
    for symbol in encoded:
        if symbol not in _DECODE_TABLE:
            raise UmlExtractionError(f"symbol {symbol!r} is outside the encoding alphabet")
        bits = (bits << 6) | _DECODE_TABLE[symbol]
        bit_count += 6
        if bit_count >= 8:
            bit_count -= 8
            out.append((bits >> bit_count) & 0xFF)
    return bytes(out)


def plantuml_encode(source: str) -> str:
    """Deflate the UTF-8 source (no container header) and alphabet-map it."""
    compressor = zlib.compressobj(9, zlib.DEFLATED, -15)
    deflated = compressor.compress(source.encode("utf-8")) + compressor.flush()
    return _encode_sextets(deflated)


def plantuml_decode(encoded: str) -> str:
    """Inverse of :func:`plantuml_encode`; accepts the ``~1`` header form."""
    if encoded.startswith("~1"):
        encoded = encoded[2:]
    if not ENCODED_RE.match(encoded):
        raise UmlExtractionError("encoded text contains symbols outside the alphabet")
    deflated = _decode_sextets(encoded)
    decompressor = zlib.decompressobj(-15)
    return (decompressor.decompress(deflated) + decompressor.flush()).decode("utf-8")


def render_diagram(
    encoded: str,
    renderer_base_url: str,
    *,
    client: httpx.Client | None = None,
    timeout_s: float = 10.0,
) -> tuple[bytes, str]:
    """GET the rendered SVG for an encoded diagram from a PlantUML server."""
    if not ENCODED_RE.match(encoded):
        raise RenderError("encoded text contains symbols outside the alphabet")
    url = f"{renderer_base_url.rstrip('/')}/svg/{encoded}"
    owned = client is None
    http = client or httpx.Client(timeout=timeout_s)
    try:
        try:
            response = http.get(url, timeout=timeout_s)
        except httpx.TransportError as exc:
            raise RenderTransportError(f"diagram renderer unreachable: {exc}") from exc
    finally:
        if owned:
            http.close()
    if response.status_code != 200:
        raise RenderError(
            f"diagram renderer returned HTTP {response.status_code}: {response.text[:200]}"
        )
    try:
        root = ET.fromstring(response.content)
    except ET.ParseError as exc:
        raise RenderError(f"renderer response is not parseable XML: {exc}")
    if not root.tag.endswith("svg"):
        raise RenderError(f"renderer response root element is {root.tag!r}, expected svg")
    return response.content, "image/svg+xml"


def generate_uml(
    description: str,
    model_label: str,
    provider: Provider,
    templates: PromptLibrary,
) -> UmlArtifact:
    """Prompt for a diagram, isolate the UML source and encode it.

    Rendering is a separate, network-bound step; the returned artifact
    carries source and encoded text only.
    """
    if not description.strip():
        raise UmlExtractionError("project description is empty")
    prompt, fp = templates.render("agent_plantuml", {"project_description": description})
    reply = provider.complete(
        ChatRequest(model_label=model_label, messages=(("user", prompt),), fingerprint=fp)
    )
    source = extract_uml_block(reply.content)
    return UmlArtifact(
        source=source,
        encoded=plantuml_encode(source),
        critique=extract_critique(reply.content),
    )
