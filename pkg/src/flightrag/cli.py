"""Command-line entry points.

Exit codes: 0 success, 1 runtime failure, 2 invalid input data,
64 usage error.
"""

from __future__ import annotations

import os
import sys

import click

from . import __version__
from . import llm as llm_mod
from .datagen import (
    generate_ambiguous,
    generate_classification_set,
    generate_fewshot_classification,
    generate_flights,
    generate_reasoning,
    generate_straightforward,
    qa_to_jsonl,
)
from .evalharness import render_report, run_full_eval
from .fixtures import build_engine_rules
from .flight_store import FlightStoreError, ingest_csv, to_csv
from .pipelines import PIPELINES, Engine, UnknownPipeline

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INPUT = 2
EXIT_USAGE = 64


@click.group()
@click.version_option(__version__, prog_name="flightrag")
def cli():
    """Conversational flight information over a tabular flight dataset."""


@cli.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
def ingest(csv_path: str):
    """Validate a flight CSV and report its size."""
    store = ingest_csv(csv_path)
    click.echo(f"ingested {len(store)} flights from {csv_path}")


@cli.command()
@click.option("--flights", "n_flights", default=1350, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--straightforward", "n_straightforward", default=150, show_default=True)
@click.option("--ambiguous", "n_ambiguous", default=185, show_default=True)
@click.option("--reasoning", "n_reasoning", default=30, show_default=True)
@click.option("--classification", "n_classification", default=220, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def genqa(n_flights, seed, n_straightforward, n_ambiguous, n_reasoning,
          n_classification, out_dir):
    """Generate the synthetic flight table, QA datasets, and LLM fixture."""
    os.makedirs(out_dir, exist_ok=True)
    store = generate_flights(n_flights, seed)
    straightforward = generate_straightforward(store, n_straightforward, seed + 1)
    ambiguous = generate_ambiguous(store, n_ambiguous, seed + 2)
    reasoning = generate_reasoning(store, n_reasoning, seed + 3)
    fewshot = generate_fewshot_classification(store)
    classification = generate_classification_set(store, n_classification)
    files = {
        "flights.csv": to_csv(store),
        "straightforward.jsonl": qa_to_jsonl(straightforward),
        "ambiguous.jsonl": qa_to_jsonl(ambiguous),
        "reasoning.jsonl": qa_to_jsonl(reasoning),
        "fewshot_classification.jsonl": qa_to_jsonl(fewshot),
        "classification.jsonl": qa_to_jsonl(classification),
        "fixture.jsonl": llm_mod.dump_fixture(
            build_engine_rules(
                store,
                fewshot + classification + straightforward + ambiguous + reasoning,
                straightforward + ambiguous + reasoning,
            )
        ),
    }
    for name, content in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(content)
        click.echo(f"wrote {os.path.join(out_dir, name)}")


def _load_engine(data: str, llm_spec: str | None, pipeline: str) -> Engine:
    if pipeline not in PIPELINES:
        raise click.UsageError(
            f"unknown pipeline: {pipeline!r} (expected one of {', '.join(PIPELINES)})"
        )
    store = ingest_csv(data)
    handle = llm_mod.parse_llm_spec(llm_spec) if llm_spec else None
    return Engine(store, llm=handle)


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Flight CSV to answer over.")
@click.option("--pipeline", default="traditional", show_default=True)
@click.option("--llm", "llm_spec", default=None,
              help="LLM spec: scripted:<fixture.jsonl> or http:<model_id>.")
@click.argument("question")
def ask(data, pipeline, llm_spec, question):
    """Answer one question and print the result."""
    engine = _load_engine(data, llm_spec, pipeline)
    answer = engine.ask(question, pipeline)
    click.echo(answer.text)
    if answer.query_text:
        click.echo(f"[query] {answer.query_text}")
    if answer.flags:
        click.echo("[flagged] " + ", ".join(f.entity for f in answer.flags))


@cli.command(name="eval")
@click.option("--seed", default=7, show_default=True)
@click.option("--flights", "n_flights", default=300, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--fmt", "formats", multiple=True, default=("json", "csv", "text"),
              show_default=True)
def eval_cmd(seed, n_flights, out_dir, formats):
    """Run the full scripted evaluation and write report files."""
    os.makedirs(out_dir, exist_ok=True)
    report = run_full_eval(seed=seed, flights=n_flights)
    ext = {"json": "json", "csv": "csv", "text": "txt"}
    for fmt in formats:
        if fmt not in ext:
            raise click.UsageError(f"unknown report format: {fmt}")
        path = os.path.join(out_dir, f"report.{ext[fmt]}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_report(report, fmt))
        click.echo(f"wrote {path}")
    click.echo(f"run_id {report.run_id}")


@cli.command()
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--llm", "llm_spec", default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(data, llm_spec, host, port):
    """Serve the HTTP API."""
    import uvicorn

    from .service import create_app

    engine = _load_engine(data, llm_spec, "traditional")
    uvicorn.run(create_app(engine), host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_RUNTIME
    except click.exceptions.Abort:
        return EXIT_RUNTIME
    except (FlightStoreError, UnknownPipeline) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    except (ValueError, OSError, llm_mod.LlmError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
