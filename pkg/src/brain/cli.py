"""Operator command line: serve, ingest, query, rebuild, stats."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .engine import Engine
from .errors import BrainError, ValidationError

DEFAULT_DATA_DIR = "./brain-data"


def _data_dir(cli_value) -> Path:
    return Path(cli_value or os.environ.get("BRAIN_DATA_DIR") or DEFAULT_DATA_DIR)


@click.group()
def main():
    """Desk-scale knowledge engine."""


@main.command()
@click.option("--port", "-p", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", "-d", default=None, help="overrides BRAIN_DATA_DIR")
@click.option("--ui-dir", default=None, help="static UI bundle to serve at /")
def serve(port, host, data_dir, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    engine = Engine(_data_dir(data_dir))
    uvicorn.run(create_app(engine, ui_dir), host=host, port=port)


@main.command()
@click.argument("feed_file", type=click.Path(exists=True))
@click.option("--data-dir", "-d", default=None)
def ingest(feed_file, data_dir):
    """Ingest a feed file, run inference, report the delta."""
    try:
        engine = Engine(_data_dir(data_dir))
        report = engine.ingest_file(feed_file)
    except ValidationError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps({
        "feed_id": report.feed_id,
        "seq": report.seq,
        "nodes_added": report.nodes_added,
        "edges_added": report.edges_added,
        "ops_applied": report.ops_applied,
    }, indent=2))


@main.command()
@click.argument("program")
@click.option("--data-dir", "-d", default=None)
@click.option("--max-results", type=int, default=None)
def query(program, data_dir, max_results):
    """Evaluate an RQL program against the graph."""
    try:
        engine = Engine(_data_dir(data_dir))
        result = engine.query(program, max_results)
    except BrainError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(result, indent=2))


@main.command()
@click.option("--data-dir", "-d", default=None)
@click.option("--exclude-source", default=None,
              help="quarantine one source while rebuilding")
@click.option("--snapshot/--no-snapshot", default=False,
              help="also write a snapshot of the live graph")
def rebuild(data_dir, exclude_source, snapshot):
    """Replay the log and verify it reproduces the live graph."""
    try:
        engine = Engine(_data_dir(data_dir))
        rebuilt = engine.rebuild(exclude_source=exclude_source)
    except BrainError as exc:
        raise click.ClickException(str(exc))
    live = engine.graph.canonical_json()
    replayed = rebuilt.canonical_json()
    stats = rebuilt.degree_stats()
    out = {
        "nodes": stats["node_count"],
        "edges": stats["edge_count"],
        "matches_live": replayed == live if exclude_source is None else None,
    }
    if snapshot:
        out["snapshot"] = str(engine.save_snapshot())
    click.echo(json.dumps(out, indent=2))
    if exclude_source is None and replayed != live:
        click.echo("rebuild does not match the live graph", err=True)
        sys.exit(2)


@main.command()
@click.option("--data-dir", "-d", default=None)
def stats(data_dir):
    """Print node/edge counts and the degree histogram."""
    try:
        engine = Engine(_data_dir(data_dir))
    except BrainError as exc:
        raise click.ClickException(str(exc))
    s = engine.stats()
    s["histogram"] = {str(k): v for k, v in s["histogram"].items()}
    click.echo(json.dumps(s, indent=2))


if __name__ == "__main__":
    main()
