"""Operator entry point.

Subcommands: ``match`` (one pair), ``eval`` (batch over a dataset),
``traces`` (search / export / import the trace DB), ``serve`` (HTTP
service), ``dataset generate`` (synthetic corpus).

Exit codes are stable API: 0 success, 1 usage or data error, 2 provider or
runtime failure. Settings resolve as flags > environment (SKUMAP_*) >
config file (--config, TOML) > defaults. Stub providers are the default;
live providers require --live.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click

from .config import EngineConfig, build_engine, load_config
from .core import new_pair
from .errors import (
    MalformedProviderOutput,
    PersistenceFailure,
    ProviderRefused,
    ProviderUnavailable,
    SkuMapError,
)
from .evalharness import (
    build_report,
    emit_report,
    generate_corpus,
    load_dataset,
    write_dataset,
)
from .pipeline import MappingMode

_PROVIDER_ERRORS = (
    ProviderUnavailable,
    ProviderRefused,
    MalformedProviderOutput,
    PersistenceFailure,
)


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="TOML config file.")(fn)
    fn = click.option("--live", is_flag=True, default=False,
                      help="Use live providers (default: offline stubs).")(fn)
    fn = click.option("--trace-db", default=None, help="Trace DB path.")(fn)
    fn = click.option("--review-queue", default=None, help="Review queue path.")(fn)
    fn = click.option("--chat-fixtures", default=None,
                      help="Scripted chat stub fixture file (JSONL).")(fn)
    fn = click.option("--search-fixtures", default=None,
                      help="Scripted search stub fixture file (JSONL).")(fn)
    return fn


def _engine(config_path, live, **overrides):
    overrides["providers"] = "live" if live else None
    cfg = load_config(config_path, overrides=overrides)
    return cfg, build_engine(cfg)


@click.group()
def cli():
    """SKU mapping engine."""


@cli.command("match")
@click.option("--base", required=True, help="Base product title.")
@click.option("--compared", required=True, help="Compared product title.")
@click.option("--mode", type=click.Choice([m.value for m in MappingMode]), default="q2k")
@click.option("--format", "fmt", type=click.Choice(["human", "record"]), default="human")
@_common_options
def cmd_match(base, compared, mode, fmt, config_path, live, **overrides):
    """Map one product pair and print the result."""
    _, engine = _engine(config_path, live, **overrides)
    pair = new_pair(base, compared)
    result = engine.map_pair(pair, MappingMode(mode))
    if fmt == "record":
        click.echo(json.dumps(result.to_dict(), ensure_ascii=False))
        return
    v = result.verdict
    click.echo(f"verdict:    {v.label.value} (confidence {v.confidence:.2f}, {v.provenance.value})")
    click.echo(f"rationale:  {v.rationale}")
    for dim, status in v.dimension_status.items():
        click.echo(f"  {dim.value:<16} {status.value}")
    if result.questions:
        click.echo("questions:")
        for q in result.questions:
            click.echo(f"  [{q.dimension.value}] {q.text}")
    if result.answers:
        click.echo("evidence:")
        for a in result.answers:
            click.echo(f"  - {a.answer_text}")
    click.echo(
        f"dedup_activated={result.dedup_activated} "
        f"web_queries={result.web_queries_issued} wall_time_ms={result.wall_time_ms}"
    )


@cli.command("eval")
@click.option("--dataset", "dataset_path", required=True, type=click.Path())
@click.option("--mode", type=click.Choice([m.value for m in MappingMode]), required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--workers", type=int, default=None)
@_common_options
def cmd_eval(dataset_path, mode, out_path, workers, config_path, live, **overrides):
    """Run a dataset through one mode and write the evaluation report."""
    overrides["workers"] = workers
    cfg, engine = _engine(config_path, live, **overrides)
    records = load_dataset(dataset_path)
    pairs = [
        new_pair(r.base_product, r.compared_product, pair_id=f"pair-{i:06d}")
        for i, r in enumerate(records, start=1)
    ]
    log = engine.run_batch(pairs, MappingMode(mode), workers=cfg.workers)
    report = build_report(mode, log, [r.label for r in records])
    txt, js = emit_report(report, out_path)
    runlog_path = Path(str(out_path) + ".runlog.jsonl")
    with open(runlog_path, "w", encoding="utf-8") as fh:
        for rec in log:
            fh.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")
    click.echo(f"accuracy: {float(report.accuracy):.4f} ({report.correct}/{report.n_pairs})")
    click.echo(f"report: {txt} {js} {runlog_path}")


@cli.group("traces")
def cmd_traces():
    """Inspect, export, or import the trace DB."""


@cmd_traces.command("search")
@click.option("--q", "query", required=True)
@click.option("--k", type=int, default=5)
@_common_options
def traces_search(query, k, config_path, live, **overrides):
    _, engine = _engine(config_path, live, **overrides)
    hits = engine.store.retrieve_topk(query, k)
    click.echo(f"{len(hits)} hits")
    for h in hits:
        click.echo(
            f"  #{h.trace.trace_id} sim={h.similarity:.4f} "
            f"[{h.trace.validation_status}] {h.trace.concat_key}"
        )


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".meta.json")


@cmd_traces.command("export")
@click.option("--out", "out_path", required=True, type=click.Path())
@_common_options
def traces_export(out_path, config_path, live, **overrides):
    cfg, _ = _engine(config_path, live, **overrides)
    if not cfg.trace_db or not Path(cfg.trace_db).exists():
        raise click.UsageError("no trace DB to export (set --trace-db)")
    src = Path(cfg.trace_db)
    dst = Path(out_path)
    shutil.copyfile(src, dst)
    if _sidecar(src).exists():
        shutil.copyfile(_sidecar(src), _sidecar(dst))
    click.echo(f"exported {src} -> {dst}")


@cmd_traces.command("import")
@click.option("--src", "src_path", required=True, type=click.Path())
@_common_options
def traces_import(src_path, config_path, live, **overrides):
    cfg, _ = _engine(config_path, live, **overrides)
    if not cfg.trace_db:
        raise click.UsageError("set --trace-db as the import destination")
    src = Path(src_path)
    if not src.exists():
        raise click.UsageError(f"source {src} does not exist")
    side = _sidecar(src)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        if int(meta["embedding_dim"]) != cfg.embedding_dim:
            raise click.UsageError(
                f"embedding dimension mismatch: store has {meta['embedding_dim']}, "
                f"configuration expects {cfg.embedding_dim}"
            )
    dst = Path(cfg.trace_db)
    shutil.copyfile(src, dst)
    if side.exists():
        shutil.copyfile(side, _sidecar(dst))
    click.echo(f"imported {src} -> {dst}")


@cli.command("serve")
@click.option("--bind", default="127.0.0.1")
@click.option("--port", type=int, default=8321)
@click.option("--seed-demo", is_flag=True, default=False,
              help="Seed one pending review item and one stored trace at startup.")
@_common_options
def cmd_serve(bind, port, seed_demo, config_path, live, **overrides):
    """Run the HTTP service until interrupted."""
    import uvicorn

    from .service import create_app

    import socket

    # fail fast with a clean exit code instead of letting the server loop log
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((bind, port))
    except OSError as exc:
        raise click.ClickException(f"cannot bind {bind}:{port}: {exc}")
    finally:
        probe.close()

    _, engine = _engine(config_path, live, **overrides)
    if seed_demo:
        _seed_demo(engine)
    app = create_app(engine)
    try:
        uvicorn.run(app, host=bind, port=port, log_level="warning")
    except OSError as exc:
        raise click.ClickException(f"cannot bind {bind}:{port}: {exc}")


def _seed_demo(engine) -> None:
    """Process one ambiguous demo pair so the queue and store are non-empty."""
    pair = new_pair("acme vitamin c 1000mg 60 tablets", "acme vitamin c 500mg 60 tablets")
    result = engine.map_pair(pair, MappingMode.Q2K)
    if not engine.queue.list_items(status="pending"):
        engine.queue.add(result, "seeded demo item")


@cli.group("dataset")
def cmd_dataset():
    """Dataset utilities."""


@cmd_dataset.command("generate")
@click.option("--n", type=int, default=200)
@click.option("--seed", type=int, default=7)
@click.option("--label-noise", type=float, default=0.0)
@click.option("--out", "out_path", required=True, type=click.Path())
def dataset_generate(n, seed, label_noise, out_path):
    """Write a synthetic labeled pair corpus."""
    write_dataset(generate_corpus(n=n, seed=seed, label_noise=label_noise), out_path)
    click.echo(f"wrote {n} pairs to {out_path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except _PROVIDER_ERRORS as exc:
        click.echo(f"provider/runtime failure: {exc}", err=True)
        return 2
    except SkuMapError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
