"""Operator entry points: ingest, ask, eval, guardrails, serve.

Exit codes: 0 success, 2 validation error, 1 runtime error (including a
nonzero guardrail error rate).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import motion_eval
from .config import load_config
from .corpus import (
    CorpusStore,
    DuplicateJurisdiction,
    EmptyHandbook,
    HandbookMeta,
    UnknownJurisdiction,
)
from .llm import LlmError, make_backend, settings_from_env
from .planner import PlanEmpty, adapt_plan, load_guardrail_cases, run_guardrail_suite
from .tre import DriverQuery, NoKeywords


@click.group()
@click.option("--mode", envvar="LLADA_LLM_MODE", default="replay",
              type=click.Choice(["remote", "record", "replay"]),
              help="Completion backend mode.")
@click.option("--cassette", envvar="LLADA_CASSETTE", default=None,
              type=click.Path(), help="Cassette file for record/replay.")
@click.option("--corpus", envvar="LLADA_CORPUS", default="corpus",
              type=click.Path(), help="Handbook corpus directory.")
@click.pass_context
def cli(ctx, mode, cassette, corpus):
    """Traffic-rule plan adaptation and motion-plan evaluation."""
    ctx.ensure_object(dict)
    ctx.obj.update(mode=mode, cassette=cassette, corpus=corpus)


def _store(ctx) -> CorpusStore:
    return CorpusStore(ctx.obj["corpus"])


def _backend(ctx):
    try:
        return make_backend(mode=ctx.obj["mode"], cassette_path=ctx.obj["cassette"])
    except (ValueError, FileNotFoundError) as exc:
        raise click.UsageError(str(exc))


@cli.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--jurisdiction-id", "-j", required=True)
@click.option("--name", "-n", required=True, help="Display name.")
@click.option("--language", default="en")
@click.pass_context
def ingest(ctx, path, jurisdiction_id, name, language):
    """Ingest a handbook text file into the corpus store."""
    try:
        meta = HandbookMeta(
            jurisdiction_id=jurisdiction_id, display_name=name, language=language
        )
        handbook = _store(ctx).ingest(
            Path(path).read_text(encoding="utf-8"), meta
        )
    except (ValueError, EmptyHandbook, DuplicateJurisdiction) as exc:
        raise click.UsageError(str(exc))
    click.echo(f"ingested {jurisdiction_id}: {len(handbook.paragraphs)} paragraphs")


@cli.command()
@click.option("--origin", default="california")
@click.option("--target", required=True)
@click.option("--plan", required=True)
@click.option("--situation", default="normal status")
@click.option("--scene", default="")
@click.option("--lang", default="en")
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_context
def ask(ctx, origin, target, plan, situation, scene, lang, as_json):
    """Adapt a driving plan to the target jurisdiction's rules."""
    try:
        query = DriverQuery(
            target_jurisdiction=target,
            nominal_plan=plan,
            origin_jurisdiction=origin,
            scene_description=scene,
            unexpected_situation=situation,
            output_language=lang,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        result = adapt_plan(query, _store(ctx), _backend(ctx), settings_from_env())
    except UnknownJurisdiction as exc:
        raise click.UsageError(f"unknown jurisdiction: {exc}")
    except (LlmError, NoKeywords, PlanEmpty) as exc:
        raise click.ClickException(str(exc))
    if as_json:
        click.echo(json.dumps({
            "trace_id": result.trace_id,
            "instruction": result.instruction,
            "generic": result.generic,
            "keywords": list(result.keywords.keywords),
            "excerpts": [
                {
                    "jurisdiction_id": e.jurisdiction_id,
                    "paragraph_index": e.paragraph_index,
                    "matched_keywords": list(e.matched_keywords),
                    "match_spans": [list(s) for s in e.match_spans],
                    "text": e.text,
                }
                for e in result.cited_excerpts
            ],
        }, indent=2))
        return
    click.echo("keywords: " + ", ".join(result.keywords.keywords))
    if result.cited_excerpts:
        click.echo("excerpts:")
        for e in result.cited_excerpts:
            click.echo(f"  [{e.jurisdiction_id} #{e.paragraph_index}] {e.text}")
    else:
        click.echo("excerpts: none (generic answer)")
    click.echo(f"plan: {result.instruction}")


@cli.command("eval")
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--ego-length", default=motion_eval.DEFAULT_EGO_LENGTH, type=float)
@click.option("--ego-width", default=motion_eval.DEFAULT_EGO_WIDTH, type=float)
@click.option("--json", "as_json", is_flag=True, default=False)
def eval_cmd(manifest, ego_length, ego_width, as_json):
    """Compute L2 and collision metrics over an eval manifest."""
    try:
        samples = motion_eval.load_manifest(manifest)
        metrics = motion_eval.evaluate(samples, ego_length, ego_width)
    except (motion_eval.ParseError, motion_eval.EmptySampleSet) as exc:
        raise click.UsageError(str(exc))
    if as_json:
        click.echo(json.dumps(metrics.to_dict(), indent=2))
    else:
        click.echo(motion_eval.render_metrics_table(metrics))


@cli.command()
@click.argument("cases", type=click.Path(exists=True))
@click.option("--n", "n_per_case", default=5, type=int, help="Examples per case.")
@click.option("--seed", default=0, type=int)
@click.option("--json", "as_json", is_flag=True, default=False)
@click.pass_context
def guardrails(ctx, cases, n_per_case, seed, as_json):
    """Run the safety guardrail suite; exit 1 on any error."""
    try:
        case_list = load_guardrail_cases(cases)
        report = run_guardrail_suite(
            case_list, n_per_case, _store(ctx), _backend(ctx),
            settings_from_env(), seed=seed,
        )
    except (ValueError, UnknownJurisdiction) as exc:
        raise click.UsageError(str(exc))
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        for case_id in sorted(report.per_case):
            stats = report.per_case[case_id]
            click.echo(
                f"{case_id}: {stats.errors}/{stats.n} errors "
                f"({100 * stats.error_rate:.1f}%)"
            )
        click.echo(f"overall error rate: {100 * report.overall_error_rate:.1f}%")
    if report.overall_error_rate > 0:
        sys.exit(1)


@cli.command()
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--port", default=None, type=int)
@click.option("--host", default="127.0.0.1")
def serve(config_path, port, host):
    """Run the HTTP service (requires uvicorn)."""
    import uvicorn

    from .service import create_app

    try:
        config = load_config(config_path)
    except FileNotFoundError as exc:
        raise click.UsageError(str(exc))
    app = create_app(config)
    uvicorn.run(app, host=host, port=port or config.port)


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
