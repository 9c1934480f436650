"""Headless command-line driver for the pipeline and individual agents.

Exit codes: 0 success, 1 domain error, 2 usage error. Output is plain
text by default and JSON with ``--format structured``; no ANSI color is
ever emitted, so NO_COLOR is honored trivially.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .errors import SdlcError
from .model import Bucket, Epic, Method, PriorityFactors, UserStory
from .pipeline import PipelineConfig, PipelineRunner, metrics_to_csv, write_artifact_tree
from .prioritization import (
    AhpMatrix,
    parse_method,
    prioritize_ahp,
    prioritize_hundred_dollar,
    prioritize_moscow,
    prioritize_wsjf,
    round_half_even,
)
from .store import ProjectStore
from .uml import plantuml_encode


def _read_text(path: str) -> str:
    file = Path(path)
    if not file.is_file():
        raise SdlcError(f"no such file: {path}")
    return file.read_text(encoding="utf-8")


def _load_story_file(path: str) -> tuple[list[UserStory], list[Epic], dict]:
    """Story file: a JSON list of stories or {"stories": [...], "matrix": [...]}.

    Each story carries id, narrative, optional epic, and per-method
    inputs: bv/tc/rr/js factors, a moscow bucket, or an allocation.
    """
    raw = json.loads(_read_text(path))
    extras = {}
    if isinstance(raw, dict):
        extras = {k: v for k, v in raw.items() if k != "stories"}
        raw = raw["stories"]
    stories: list[UserStory] = []
    epics: dict[str, Epic] = {}
    buckets: list[Bucket | None] = []
    allocations: list[Fraction | None] = []
    for i, entry in enumerate(raw, start=1):
        epic_title = entry.get("epic", "General")
        if epic_title not in epics:
            epics[epic_title] = Epic(id=f"E{len(epics) + 1}", title=epic_title)
        factors = None
        if all(key in entry for key in ("bv", "tc", "rr", "js")):
            factors = PriorityFactors(
                business_value=entry["bv"],
                time_criticality=entry["tc"],
                risk_reduction=entry["rr"],
                job_size=entry["js"],
            )
        stories.append(
            UserStory(
                id=str(entry.get("id", f"S{i}")),
                epic_id=epics[epic_title].id,
                narrative=entry["narrative"],
                factors=factors,
            )
        )
        buckets.append(Bucket(entry["bucket"]) if "bucket" in entry else None)
        allocations.append(
            Fraction(str(entry["allocation"])) if "allocation" in entry else None
        )
    extras["buckets"] = buckets
    extras["allocations"] = allocations
    return stories, list(epics.values()), extras


def _rank_offline(method: Method, stories, extras):
    if method is Method.WSJF:
        return prioritize_wsjf(stories)
    if method is Method.MOSCOW:
        buckets = extras["buckets"]
        if any(b is None for b in buckets):
            raise SdlcError("moscow ranking needs a 'bucket' field on every story")
        return prioritize_moscow(stories, buckets)
    if method is Method.HUNDRED_DOLLAR:
        allocations = extras["allocations"]
        if any(a is None for a in allocations):
            raise SdlcError("hundred_dollar ranking needs an 'allocation' field on every story")
        return prioritize_hundred_dollar(stories, allocations)
    matrix_rows = extras.get("matrix")
    if not matrix_rows:
        raise SdlcError("ahp ranking needs a top-level 'matrix' field in the story file")
    matrix = AhpMatrix(
        entries=tuple(tuple(Fraction(str(v)) for v in row) for row in matrix_rows)
    )
    return prioritize_ahp(stories, matrix)


def _print_ranking(result, stories, structured: bool) -> None:
    by_id = {story.id: story for story in stories}
    rows = []
    for ranked in sorted(result.ranked, key=lambda r: r.rank):
        value = ""
        if ranked.score is not None:
            value = round_half_even(ranked.score)
        elif ranked.allocation is not None:
            value = round_half_even(ranked.allocation)
        elif ranked.bucket is not None:
            value = ranked.bucket.value
        rows.append((ranked.rank, ranked.story_id, value, by_id[ranked.story_id].narrative))
    if structured:
        print(
            json.dumps(
                {
                    "method": result.method.value,
                    "ranked": [
                        {"rank": rank, "story_id": story_id, "value": value}
                        for rank, story_id, value, _ in rows
                    ],
                },
                indent=1,
            )
        )
        return
    print(f"{'rank':>4}  {'story':<8} {'value':>8}  narrative")
    for rank, story_id, value, narrative in rows:
        shortened = narrative if len(narrative) <= 70 else narrative[:67] + "..."
        print(f"{rank:>4}  {story_id:<8} {value:>8}  {shortened}")


def _cmd_pipeline_run(args) -> int:
    config = PipelineConfig(
        model_label=args.model,
        prioritization_method=parse_method(args.method),
        provider_mode="mock" if args.mock else "live",
        mock_script_path=Path(args.mock) if args.mock else None,
        renderer_base_url=args.renderer_url,
        store_root=Path(args.out) / "store",
    )
    runner = PipelineRunner(config)
    project = runner.run(_read_text(args.requirements), title=args.title)
    root = write_artifact_tree(project, Path(args.out))
    if args.format == "structured":
        print(json.dumps({"project_id": project.id, "phase": project.phase.value,
                          "artifact_root": str(root)}, indent=1))
    else:
        print(f"project {project.id} finished at phase {project.phase.value}")
        print(f"artifacts written under {root}")
    return 0


def _cmd_prioritize(args) -> int:
    stories, _epics, extras = _load_story_file(args.stories)
    result = _rank_offline(parse_method(args.method), stories, extras)
    _print_ranking(result, stories, structured=args.format == "structured")
    return 0


def _cmd_uml_encode(args) -> int:
    print(plantuml_encode(_read_text(args.file)))
    return 0


def _cmd_code_gen(args) -> int:
    from .codegen import GenerationRequest, generate_artifact
    from .gateway import MockProvider, MockScript
    from .model import GenMethod
    from .pipeline import build_provider
    from .prompts import PromptLibrary

    try:
        method = GenMethod(args.method)
    except ValueError:
        raise SdlcError(f"unknown generation method {args.method!r}")
    if args.mock:
        provider = MockProvider(MockScript.load(args.mock))
    else:
        provider = build_provider(
            PipelineConfig(model_label=args.model, provider_mode="live")
        )
    artifact = generate_artifact(
        GenerationRequest(content=_read_text(args.content), model_label=args.model, method=method),
        provider,
        PromptLibrary(),
    )
    if args.format == "structured":
        print(
            json.dumps(
                {
                    "method": artifact.method.value,
                    "narrative": artifact.narrative,
                    "blocks": [
                        {"language": b.language_label, "body": b.body} for b in artifact.blocks
                    ],
                },
                indent=1,
            )
        )
        return 0
    if artifact.narrative:
        print(artifact.narrative)
    for block in artifact.blocks:
        print(f"```{block.language_label}")
        print(block.body)
        print("```")
    return 0


def _cmd_metrics_export(args) -> int:
    store = ProjectStore(Path(args.store))
    project = store.load(args.project_id)
    sys.stdout.write(metrics_to_csv(project).decode("utf-8"))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        provider_mode="mock" if args.mock else "live",
        mock_script_path=Path(args.mock) if args.mock else None,
        model_label=args.model,
        store_root=Path(args.store),
        renderer_base_url=args.renderer_url,
        ui_dist=Path(args.ui_dist) if args.ui_dist else None,
    )
    uvicorn.run(create_app(config), host=args.bind, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdlc-agents",
        description="Multi-agent SDLC pipeline: stories, prioritization, UML, code and compliance.",
    )
    parser.add_argument(
        "--format", choices=["text", "structured"], default="text",
        help="output format (structured = JSON)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pipeline = sub.add_parser("pipeline", help="full pipeline operations")
    pipeline_sub = pipeline.add_subparsers(dest="pipeline_command", required=True)
    run = pipeline_sub.add_parser("run", help="run all phases headlessly")
    run.add_argument("--requirements", required=True, help="file with the requirements text")
    run.add_argument("--method", default="wsjf", help="prioritization method")
    run.add_argument("--mock", help="mock script file (offline run)")
    run.add_argument("--model", default="gpt-3.5-turbo")
    run.add_argument("--title", default="Untitled project")
    run.add_argument("--renderer-url", default="", help="PlantUML server base URL")
    run.add_argument("--out", required=True, help="artifact output directory")
    run.set_defaults(handler=_cmd_pipeline_run)

    prioritize = sub.add_parser("prioritize", help="offline ranking of a story file")
    prioritize.add_argument("--stories", required=True, help="JSON story file")
    prioritize.add_argument("--method", required=True)
    prioritize.set_defaults(handler=_cmd_prioritize)

    uml_cmd = sub.add_parser("uml", help="UML utilities")
    uml_sub = uml_cmd.add_subparsers(dest="uml_command", required=True)
    encode = uml_sub.add_parser("encode", help="print the PlantUML text encoding of a file")
    encode.add_argument("file")
    encode.set_defaults(handler=_cmd_uml_encode)

    code = sub.add_parser("code", help="code generation")
    code_sub = code.add_subparsers(dest="code_command", required=True)
    gen = code_sub.add_parser("gen", help="generate one artifact")
    gen.add_argument("--content", required=True, help="file with the requirement text")
    gen.add_argument("--method", required=True, help="backend|frontend|unit_test|e2e_test")
    gen.add_argument("--model", default="gpt-3.5-turbo")
    gen.add_argument("--mock", help="mock script file")
    gen.set_defaults(handler=_cmd_code_gen)

    metrics = sub.add_parser("metrics", help="metrics utilities")
    metrics_sub = metrics.add_subparsers(dest="metrics_command", required=True)
    export = metrics_sub.add_parser("export", help="print a project's metrics as CSV")
    export.add_argument("project_id")
    export.add_argument("--store", required=True, help="store root directory")
    export.set_defaults(handler=_cmd_metrics_export)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--bind", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--mock", help="mock script file")
    serve.add_argument("--model", default="gpt-3.5-turbo")
    serve.add_argument("--store", default="store")
    serve.add_argument("--renderer-url", default="")
    serve.add_argument("--ui-dist", default="", help="directory with the built steering UI")
    serve.set_defaults(handler=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except SdlcError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
