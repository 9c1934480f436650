import random

import pytest

from sdlc_agents.codegen import (
    ConfigurationError,
    GenerationRequest,
    NoCodeBlocksError,
    UnterminatedFenceError,
    extension_for_language,
    extract_code_blocks,
    generate_artifact,
    parse_code_reply,
    select_endpoint,
)
from sdlc_agents.gateway import MockProvider, MockScript, ProviderConfig
from sdlc_agents.model import GenMethod


class TestExtractCodeBlocks:
    def test_single_python_block(self):
        assert extract_code_blocks("```python\nx=1\n```") == [("python", "x=1")]

    def test_two_blocks_with_prose(self):
        text = "intro\n```py\na\n```\nbetween\n```js\nb\n```\noutro"
        parsed = parse_code_reply(text)
        assert [block.language_label for block in parsed.blocks] == ["py", "js"]
        assert "intro" in parsed.narrative and "between" in parsed.narrative

    def test_unterminated_fence_reports_line(self):
        with pytest.raises(UnterminatedFenceError) as err:
            extract_code_blocks("prose\n```\ncode")
        assert err.value.open_line == 2

    def test_empty_tag_labeled_unknown(self):
        assert extract_code_blocks("```\nbody\n```")[0][0] == "unknown"

    def test_no_nesting_first_close_wins(self):
        text = "```python\nouter\n```\ninner\n```"
        with pytest.raises(UnterminatedFenceError):
            extract_code_blocks(text)

    def test_body_preserved_byte_exactly(self):
        body = "def f():\n    return '```not a fence in spirit'\n\n\nx = 1"
        # the inner backticks at line start would close the fence, so use indented ones
        text = f"```python\n{body}\n```"
        blocks = extract_code_blocks(text)
        assert blocks[0][1] == body


class TestLosslessSplit:
    def generate_document(self, rng: random.Random) -> str:
        lines = []
        for _ in range(rng.randint(0, 6)):
            segment_kind = rng.random()
            if segment_kind < 0.5:
                for _ in range(rng.randint(0, 4)):
                    lines.append(
                        rng.choice(
                            ["Some prose.", "", "More notes here.", "  indented thought"]
                        )
                    )
            else:
                tag = rng.choice(["python", "js", "", "text more"])
                lines.append(f"```{tag}")
                for _ in range(rng.randint(0, 5)):
                    lines.append(rng.choice(["x = 1", "", "  body line", "print('hi')"]))
                lines.append("```")
        return "\n".join(lines)

    def test_reassemble_is_identity(self):
        rng = random.Random(404)
        for _ in range(300):
            document = self.generate_document(rng)
            parsed = parse_code_reply(document)
            assert parsed.reassemble() == document


class TestListings:
    def test_listing1_parses_to_one_block(self, fixtures_dir):
        listing = (fixtures_dir / "listing_backend_login.py.txt").read_text(encoding="utf-8").rstrip("\n")
        blocks = extract_code_blocks(f"```python\n{listing}\n```")
        assert len(blocks) == 1
        assert blocks[0][1].splitlines()[0] == "from flask import Flask, request, jsonify"

    def test_listing2_parses_to_one_block(self, fixtures_dir):
        listing = (fixtures_dir / "listing_frontend_login.js.txt").read_text(encoding="utf-8").rstrip("\n")
        blocks = extract_code_blocks(f"```javascript\n{listing}\n```")
        assert len(blocks) == 1
        assert blocks[0][1].splitlines()[0] == "// Login.js"


class TestSelectEndpoint:
    PROVIDERS = {
        "gpt-3.5-turbo": ProviderConfig(
            label="gpt-3.5-turbo", endpoint_url="http://a.test", auth_key_ref="K1"
        ),
        "llama3": ProviderConfig(
            label="llama3", endpoint_url="http://b.test", auth_key_ref="K2"
        ),
    }

    def test_backend_maps_to_backend_template(self):
        template_id, config = select_endpoint("gpt-3.5-turbo", GenMethod.BACKEND, self.PROVIDERS)
        assert template_id == "agent_backend"
        assert config.label == "gpt-3.5-turbo"

    def test_llama_e2e(self):
        template_id, config = select_endpoint("llama3", GenMethod.E2E_TEST, self.PROVIDERS)
        assert template_id == "agent_e2e_test"
        assert config.label == "llama3"

    def test_unknown_model_names_key(self):
        with pytest.raises(ConfigurationError) as err:
            select_endpoint("gpt-5", GenMethod.BACKEND, self.PROVIDERS)
        assert "gpt-5" in str(err.value)


class TestGenerateArtifact:
    def test_backend_listing_artifact(self, mock_provider, templates):
        artifact = generate_artifact(
            GenerationRequest(
                content="Login requirement.", model_label="gpt-3.5-turbo", method=GenMethod.BACKEND
            ),
            mock_provider,
            templates,
        )
        assert len(artifact.blocks) == 1
        block = artifact.blocks[0]
        assert block.language_label == "python"
        assert "@app.route('/login', methods=['POST'])" in block.body
        assert "TestLoginAPI" in block.body

    def test_frontend_listing_artifact(self, mock_provider, templates):
        artifact = generate_artifact(
            GenerationRequest(
                content="Login requirement.", model_label="gpt-3.5-turbo", method=GenMethod.FRONTEND
            ),
            mock_provider,
            templates,
        )
        assert len(artifact.blocks) == 1
        body = artifact.blocks[0].body
        assert 'placeholder="Username"' in body
        assert 'placeholder="Password"' in body

    def test_prose_only_reply_is_zero_blocks_error(self, templates):
        script = MockScript(entries={"agent_backend:*": "I would write code, but."})
        with pytest.raises(NoCodeBlocksError) as err:
            generate_artifact(
                GenerationRequest(content="x", model_label="m", method=GenMethod.BACKEND),
                MockProvider(script),
                templates,
            )
        assert err.value.narrative == "I would write code, but."

    def test_mock_generation_is_deterministic(self, mock_provider, templates):
        request = GenerationRequest(
            content="Login requirement.", model_label="gpt-3.5-turbo", method=GenMethod.UNIT_TEST
        )
        first = generate_artifact(request, mock_provider, templates)
        second = generate_artifact(request, mock_provider, templates)
        assert first == second

    def test_empty_content_rejected(self):
        with pytest.raises(ValueError):
            GenerationRequest(content=" ", model_label="m", method=GenMethod.BACKEND)


def test_extension_mapping():
    assert extension_for_language("python") == "py"
    assert extension_for_language("JavaScript") == "js"
    assert extension_for_language("mystery") == "txt"
