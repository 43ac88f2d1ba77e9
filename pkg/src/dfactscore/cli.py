"""Command-line entry point: corpus construction, generation,
evaluation, reporting, agreement analysis, and the annotation server.

Every command writes a manifest next to its outputs recording inputs,
seed, and tool version, and is rerunnable: identical inputs plus the
same seed and replay transcript give identical output bytes. Endpoints
and tokens come only from environment variables, never from config
files or flags.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

import click

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, analysis, generation, judge as judge_mod, pipeline
from .analysis import AnalysisError, agreement_rate, compare_human_auto
from .annotation.service import create_app, read_tasks_jsonl
from .annotation.store import AnnotationStore
from .core import Category, ParagraphReport
from .knowledge import (
    KnowledgeError,
    PassageStore,
    build_ambigbio,
    ingest_dump,
    read_disambig_jsonl,
    read_dump_jsonl,
)
from .retrieval import EndpointUnreachable, RetrievalError, RetrieverConfig

ENV_EMBED_ENDPOINT = "DFS_EMBED_ENDPOINT"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TRANSPORT = 2


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _config_get(config: dict, section: str, key: str, fallback):
    return config.get(section, {}).get(key, fallback)


def _write_manifest(output: Path, payload: dict) -> None:
    if output.is_dir():
        manifest_path = output / "manifest.json"
    else:
        manifest_path = output.parent / f"{output.name}.manifest.json"
    payload = {"tool_version": __version__, **payload}
    manifest_path.write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def _retriever_config(config: dict, backend: Optional[str], k: Optional[int]) -> RetrieverConfig:
    backend = backend or _config_get(config, "retrieval", "backend", "lexical")
    k = k or _config_get(config, "retrieval", "k", 5)
    endpoint = None
    if backend == "embedding_service":
        endpoint = os.environ.get(ENV_EMBED_ENDPOINT)
        if not endpoint:
            raise click.ClickException(
                f"embedding_service backend needs {ENV_EMBED_ENDPOINT} set"
            )
    return RetrieverConfig(backend=backend, k=k, endpoint=endpoint)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML config file; flags override its values.")
@click.pass_context
def cli(ctx: click.Context, config_path: Optional[str]) -> None:
    """Factual-precision evaluation toolkit (FS / D-FS / citation recall)."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = _load_config(config_path)
    ctx.obj["config_path"] = config_path


@cli.command()
@click.option("--dump", "dump_path", required=True, type=click.Path(exists=True),
              help="JSONL dump with {title, text} per line.")
@click.option("--out", "out_dir", required=True, type=click.Path(),
              help="Store directory to create.")
@click.pass_context
def ingest(ctx: click.Context, dump_path: str, out_dir: str) -> None:
    """Build a passage store from a dump file."""
    store = ingest_dump(read_dump_jsonl(dump_path))
    out = Path(out_dir)
    store.save(out)
    _write_manifest(out, {
        "command": "ingest",
        "config_path": ctx.obj.get("config_path"),
        "inputs": {"dump": str(dump_path)},
        "outputs": {"store": str(out)},
        "pages": len(store),
        "passages": store.passage_count,
    })
    click.echo(f"ingested {len(store)} pages / {store.passage_count} passages -> {out}")


@cli.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--disambig", "disambig_path", required=True, type=click.Path(exists=True),
              help="JSONL with {name, members} per line.")
@click.option("--sample", "sample_size", required=True, type=int)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def ambigbio(ctx, store_dir: str, disambig_path: str, sample_size: int, seed: int,
             out_path: str) -> None:
    """Mine disambiguation records into a seeded sample of ambiguous names."""
    store = PassageStore.load(store_dir)
    names = build_ambigbio(store, read_disambig_jsonl(disambig_path), sample_size, seed)
    out = Path(out_path)
    with open(out, "w", encoding="utf-8") as fh:
        for entry in names:
            fh.write(json.dumps({
                "name": entry.name,
                "candidates": [
                    {"title": e.title, "page_id": e.page_id}
                    for e in entry.candidate_entities
                ],
            }, ensure_ascii=False) + "\n")
    _write_manifest(out, {
        "command": "ambigbio",
        "config_path": ctx.obj.get("config_path"),
        "seed": seed,
        "inputs": {"store": store_dir, "disambig": disambig_path},
        "outputs": {"names": str(out)},
        "sample_size": sample_size,
    })
    click.echo(f"sampled {len(names)} ambiguous names -> {out}")


@cli.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--names", "names_path", required=True, type=click.Path(exists=True))
@click.option("--demos", type=click.Choice(["with_ambiguity", "without_ambiguity"]),
              default="with_ambiguity", show_default=True)
@click.option("--retriever", "backend", type=click.Choice(["lexical", "embedding_service"]),
              default=None)
@click.option("--k", type=int, default=None, help="Passages per prompt.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--workers", type=int, default=1, show_default=True)
@click.pass_context
def generate(ctx, store_dir: str, names_path: str, demos: str, backend: Optional[str],
             k: Optional[int], out_path: str, workers: int) -> None:
    """Generate cited biographies for each name via the DFS_GEN_* endpoint."""
    from concurrent.futures import ThreadPoolExecutor

    store = PassageStore.load(store_dir)
    config = _retriever_config(ctx.obj["config"], backend, k)
    demo_set = generation.load_demo_set(demos)
    generator = generation.RemoteGenerator.from_env()
    names = []
    with open(names_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                names.append(json.loads(line)["name"])

    def run(name: str) -> generation.GenerationRecord:
        return generation.generate_bio(generator, name, store, config, demo_set)

    if workers <= 1:
        records = [run(n) for n in names]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, names))
    out = Path(out_path)
    generation.write_generation_records(records, out, model_tag=generator.model_tag)
    _write_manifest(out, {
        "command": "generate",
        "config_path": ctx.obj.get("config_path"),
        "inputs": {"store": store_dir, "names": names_path},
        "outputs": {"bios": str(out)},
        "demos": demos,
        "generator_tag": generator.model_tag,
        "retriever": {"backend": config.backend, "k": config.k},
    })
    click.echo(f"generated {len(records)} biographies -> {out}")


@cli.command()
@click.option("--store", "store_dir", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help="Paragraph JSONL ({paragraph_id, name, text, citations_resolved}).")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["fs", "dfs", "both"]), default=None)
@click.option("--assign", "assign_mode", type=click.Choice(["independent", "hungarian"]),
              default=None)
@click.option("--replay", "replay_path", type=click.Path(exists=True), default=None,
              help="Judge transcript to replay; no remote calls.")
@click.option("--record", "record_path", type=click.Path(), default=None,
              help="Record judge calls to this transcript.")
@click.option("--retriever", "backend", type=click.Choice(["lexical", "embedding_service"]),
              default=None)
@click.option("--k", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.pass_context
def evaluate(ctx, store_dir: str, input_path: str, out_dir: str, mode: Optional[str],
             assign_mode: Optional[str], replay_path: Optional[str],
             record_path: Optional[str], backend: Optional[str], k: Optional[int],
             workers: Optional[int]) -> None:
    """Score paragraphs: FS, D-FS, categories, citation recall."""
    config = ctx.obj["config"]
    mode = mode or _config_get(config, "evaluate", "mode", "both")
    assign_mode = assign_mode or _config_get(config, "evaluate", "assign", "independent")
    workers = workers or _config_get(config, "evaluate", "workers", 1)
    retriever = _retriever_config(config, backend, k)

    store = PassageStore.load(store_dir)
    paragraphs = pipeline.read_paragraphs_jsonl(input_path)
    if replay_path:
        judge = judge_mod.ReplayJudge(replay_path)
    else:
        judge = judge_mod.RemoteJudge.from_env()
    if record_path:
        judge = judge_mod.RecordingJudge(judge, judge_mod.TranscriptWriter(record_path))

    options = pipeline.EvaluateOptions(
        mode=mode,
        assign_mode=assign_mode,
        evidence_k=_config_get(config, "evaluate", "evidence_k", pipeline.EVIDENCE_K),
    )
    result = pipeline.evaluate_corpus(
        paragraphs, store, retriever, judge, options, workers=workers
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_reports(result, out / "reports.jsonl", out / "fact_details.jsonl")
    _write_manifest(out, {
        "command": "evaluate",
        "config_path": ctx.obj.get("config_path"),
        "inputs": {"store": store_dir, "paragraphs": input_path,
                   "replay": replay_path},
        "outputs": {"reports": str(out / "reports.jsonl"),
                    "fact_details": str(out / "fact_details.jsonl")},
        "judge_tag": judge.provider_tag,
        "options": {"mode": mode, "assign": assign_mode, "workers": workers,
                    "retriever": {"backend": retriever.backend, "k": retriever.k}},
        "paragraphs": len(paragraphs),
        "scored": len(result.evaluations),
        "unscorable": len(result.unscorable),
    })
    click.echo(
        f"scored {len(result.evaluations)} paragraphs"
        f" ({len(result.unscorable)} unscorable) -> {out}"
    )


def _load_report_rows(path: str) -> tuple[list[ParagraphReport], int]:
    reports = []
    unscorable = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if row.get("unscorable"):
                unscorable += 1
                continue
            if row.get("fs") is None or row.get("dfs") is None:
                continue  # partial-mode rows cannot be aggregated
            reports.append(ParagraphReport(
                paragraph_id=row["paragraph_id"],
                fs=Fraction(row["fs"]),
                dfs=Fraction(row["dfs"]),
                num_bios=row["num_bios"],
                num_entities=row["num_entities"],
                category=Category(row["category"]),
                relevant_fact_count=row["relevant_fact_count"],
                citation_recall=(
                    Fraction(row["citation_recall"])
                    if row.get("citation_recall") is not None
                    else None
                ),
            ))
    return reports, unscorable


def _parse_run(value: str) -> tuple[str, str]:
    tag, sep, path = value.partition("=")
    if not sep or not tag or not path:
        raise click.BadParameter(f"expected TAG=path, got {value!r}")
    return tag, path


@cli.command()
@click.option("--run", "runs", multiple=True, required=True,
              help="TAG=reports.jsonl; repeatable.")
@click.option("--paired", "paired_runs", multiple=True,
              help="TAG=reports.jsonl for the right-hand cell values.")
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]),
              default="table", show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def report(ctx, runs, paired_runs, fmt: str, out_path: Optional[str]) -> None:
    """Aggregate report files into a model-level table."""
    summaries = []
    for item in runs:
        tag, path = _parse_run(item)
        reports, unscorable = _load_report_rows(path)
        summaries.append(analysis.aggregate(reports, tag, n_unscorable=unscorable))
    paired = {}
    for item in paired_runs:
        tag, path = _parse_run(item)
        reports, unscorable = _load_report_rows(path)
        paired[tag] = analysis.aggregate(reports, tag, n_unscorable=unscorable)
    if fmt == "table":
        rendered = analysis.render_summary_table(summaries, paired or None)
    elif fmt == "json":
        rendered = analysis.summary_to_json(summaries)
    else:
        rendered = analysis.summary_to_csv(summaries)
    if out_path:
        out = Path(out_path)
        out.write_text(rendered, encoding="utf-8")
        _write_manifest(out, {
            "command": "report",
            "config_path": ctx.obj.get("config_path"),
            "inputs": {"runs": list(runs), "paired": list(paired_runs)},
            "outputs": {"report": str(out)},
            "format": fmt,
        })
    else:
        click.echo(rendered, nl=False)


@cli.command()
@click.option("--human", "human_path", required=True, type=click.Path(exists=True),
              help="Annotation export JSON (from /export).")
@click.option("--auto", "auto_path", required=True, type=click.Path(exists=True),
              help="Automatic reports JSONL.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def agree(ctx, human_path: str, auto_path: str, out_path: Optional[str]) -> None:
    """Correlate human and automatic scores; report annotator agreement."""
    export = json.loads(Path(human_path).read_text(encoding="utf-8"))
    human_rows = [r for r in export["rows"] if r.get("role", "primary") == "primary"]
    auto_rows = []
    with open(auto_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                if not row.get("unscorable"):
                    auto_rows.append(row)
    correlation = compare_human_auto(human_rows, auto_rows)

    rows_by_key = {(r["paragraph_id"], r["annotator_id"]): r for r in export["rows"]}
    pair_stats = []
    for pair in export.get("agreement_pairs", []):
        first, second = pair["annotators"]
        row_a = rows_by_key.get((pair["paragraph_id"], first))
        row_b = rows_by_key.get((pair["paragraph_id"], second))
        if not row_a or not row_b:
            continue
        fact_ids = sorted(row_a["fact_labels"])
        labels_a = [row_a["fact_labels"][f] for f in fact_ids]
        labels_b = [row_b["fact_labels"][f] for f in fact_ids]
        pair_stats.append({
            "paragraph_id": pair["paragraph_id"],
            "fact_label_agreement": float(agreement_rate(labels_a, labels_b)),
            "num_bios_match": row_a["num_bios"] == row_b["num_bios"],
        })
    payload = {
        "n_overlap": correlation.n_overlap,
        "pearson": {
            "pooled": {"dfs": correlation.pooled_dfs,
                       "num_bios": correlation.pooled_num_bios},
            "per_model": {
                tag: {"dfs": r, "num_bios": b}
                for tag, (r, b) in correlation.per_model.items()
            },
        },
        "agreement": {
            "pairs_completed": len(pair_stats),
            "mean_fact_label_agreement": (
                sum(p["fact_label_agreement"] for p in pair_stats) / len(pair_stats)
                if pair_stats else None
            ),
            "num_bios_agreement": (
                sum(1 for p in pair_stats if p["num_bios_match"]) / len(pair_stats)
                if pair_stats else None
            ),
            "pairs": pair_stats,
        },
    }
    rendered = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if out_path:
        out = Path(out_path)
        out.write_text(rendered, encoding="utf-8")
        _write_manifest(out, {
            "command": "agree",
            "config_path": ctx.obj.get("config_path"),
            "inputs": {"human": human_path, "auto": auto_path},
            "outputs": {"report": str(out)},
        })
    else:
        click.echo(rendered, nl=False)


@cli.command()
@click.option("--tasks", "tasks_path", required=True, type=click.Path(exists=True))
@click.option("--journal", "journal_path", required=True, type=click.Path())
@click.option("--annotators", required=True,
              help="Comma-separated annotator ids.")
@click.option("--overlap", type=float, default=0.10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--token", default="", help="Shared token for X-DFS-Token.")
def serve(tasks_path: str, journal_path: str, annotators: str, overlap: float,
          seed: int, host: str, port: int, token: str) -> None:
    """Run the annotation HTTP service."""
    import uvicorn

    store = AnnotationStore(
        tasks=read_tasks_jsonl(tasks_path),
        annotators=[a.strip() for a in annotators.split(",") if a.strip()],
        journal_path=journal_path,
        overlap=overlap,
        seed=seed,
    )
    app = create_app(store, token=token)
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_INPUT)
    except click.Abort:
        sys.exit(EXIT_INPUT)
    except (judge_mod.TransportError, judge_mod.RateLimited, EndpointUnreachable) as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(EXIT_TRANSPORT)
    except (
        KnowledgeError,
        RetrievalError,
        pipeline.PipelineError,
        AnalysisError,
        judge_mod.JudgeError,
        OSError,
        json.JSONDecodeError,
        ValueError,
        KeyError,
    ) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
