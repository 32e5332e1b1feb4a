"""Batch command-line workflows over EMBT files.

Every subcommand reads files, writes files, and exits; exit codes are 0 on
success, 2 for usage errors, 3 for data/format errors, 4 for internal
failures. Each run records the full flag set that produced an artifact:
JSON reports embed it under "config", other artifacts get a sibling
"<path>.config.json".
"""

from __future__ import annotations

import json
import sys

import click

from .errors import ProtoAnchorError
from .harness import (
    SynthSpec,
    generate_synthetic,
    resolve_threads,
    run_pipeline,
    sweep_k,
    sweep_prompts,
    write_sweep_csv,
)
from .heads import classify_single, score_multi, write_predictions
from .prompts import STANDARD_TEMPLATES, PromptTemplate
from .prototypes import build_text_anchored, load_prototypes, save_prototypes
from .store import load_table, write_table

DEFAULT_K = 35


def _write_config_sidecar(artifact_path, config: dict) -> None:
    path = str(artifact_path) + ".config.json"
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(json.dumps({"config": config}, sort_keys=True, ensure_ascii=False, indent=2))
        f.write("\n")


def _write_report(path, report) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(report.to_json())
        f.write("\n")


def _template_label(t: PromptTemplate) -> str:
    return t.pattern if t.case_mode == "preserve" else f"{t.case_mode}:{t.pattern}"


def _load_templates(path) -> list[PromptTemplate]:
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    templates = []
    for entry in raw:
        if isinstance(entry, str):
            templates.append(PromptTemplate(entry))
        else:
            templates.append(PromptTemplate(entry["pattern"], entry.get("case_mode", "preserve")))
    return templates


@click.group()
def cli():
    """Text-anchored prototypical classification over embedding files."""


@cli.command("build")
@click.option("--audio", required=True, help="Audio pool EMBT file.")
@click.option("--audio-meta", required=True, help="Audio pool JSONL sidecar.")
@click.option("--text", required=True, help="Text anchor EMBT file (ids become class names).")
@click.option("--text-meta", required=True, help="Text anchor JSONL sidecar.")
@click.option("--k", type=click.IntRange(min=1), default=DEFAULT_K, show_default=True,
              help="Cluster size per anchor.")
@click.option("--out", required=True, help="Output prototype EMBT file.")
@click.option("--out-meta", required=True, help="Output prototype JSONL sidecar.")
def cmd_build(audio, audio_meta, text, text_meta, k, out, out_meta):
    """Build prototypes: per text anchor, the centroid of its k nearest audio rows."""
    audio_table = load_table(audio, audio_meta)
    text_table = load_table(text, text_meta)
    protos = build_text_anchored(text_table, audio_table, k)
    save_prototypes(protos, out, out_meta)
    _write_config_sidecar(out, {
        "command": "build", "audio": str(audio), "audio_meta": str(audio_meta),
        "text": str(text), "text_meta": str(text_meta), "k": k,
        "out": str(out), "out_meta": str(out_meta),
    })


@cli.command("classify")
@click.option("--protos", required=True, help="Prototype EMBT file.")
@click.option("--protos-meta", required=True, help="Prototype JSONL sidecar.")
@click.option("--query", required=True, help="Query EMBT file.")
@click.option("--query-meta", required=True, help="Query JSONL sidecar.")
@click.option("--head", type=click.Choice(["single", "multi"]), default="single",
              show_default=True)
@click.option("--temperature", type=click.FloatRange(min=0, min_open=True), default=1.0,
              show_default=True)
@click.option("--out", required=True, help="Predictions JSONL output.")
def cmd_classify(protos, protos_meta, query, query_meta, head, temperature, out):
    """Score queries against stored prototypes."""
    proto_set = load_prototypes(protos, protos_meta)
    queries = load_table(query, query_meta)
    if head == "single":
        preds, matrix = classify_single(queries, proto_set, temperature)
        write_predictions(out, matrix, preds)
    else:
        matrix = score_multi(queries, proto_set)
        write_predictions(out, matrix)
    _write_config_sidecar(out, {
        "command": "classify", "protos": str(protos), "protos_meta": str(protos_meta),
        "query": str(query), "query_meta": str(query_meta), "head": head,
        "temperature": temperature, "out": str(out),
    })


def _eval_options(f):
    opts = [
        click.option("--audio", required=True),
        click.option("--audio-meta", required=True),
        click.option("--text", required=True),
        click.option("--text-meta", required=True),
        click.option("--head", type=click.Choice(["single", "multi"]), default="single",
                     show_default=True),
        click.option("--metric", type=click.Choice(["acc", "map"]), default=None,
                     help="Defaults to acc for single, map for multi."),
        click.option("--pool", type=click.Choice(["train_folds_only", "all_audio"]),
                     default="train_folds_only", show_default=True),
        click.option("--temperature", type=click.FloatRange(min=0, min_open=True),
                     default=1.0, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True,
                     help="Recorded in the report config."),
        click.option("--report", required=True, help="Output report JSON."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _check_metric(head: str, metric: str | None) -> str:
    expected = "acc" if head == "single" else "map"
    if metric is None:
        return expected
    if metric != expected:
        raise click.UsageError(f"--metric {metric} does not match --head {head}")
    return metric


def _run_eval(kind, audio, audio_meta, text, text_meta, k, head, metric, pool,
              temperature, seed, report_path):
    metric = _check_metric(head, metric)
    audio_table = load_table(audio, audio_meta)
    text_table = load_table(text, text_meta)
    config = {
        "command": kind, "audio": str(audio), "audio_meta": str(audio_meta),
        "text": str(text), "text_meta": str(text_meta), "head": head,
        "metric": metric, "pool_policy": pool, "temperature": temperature,
        "seed": seed,
    }
    if kind == "eval":
        config["k"] = k
    pipeline_head = ("proto_" if kind == "eval" else "zeroshot_") + head
    report = run_pipeline(audio_table, text_table, k, pipeline_head, pool,
                          temperature=temperature, config=config)
    _write_report(report_path, report)


@cli.command("eval")
@click.option("--k", type=click.IntRange(min=1), default=DEFAULT_K, show_default=True)
@_eval_options
def cmd_eval(audio, audio_meta, text, text_meta, head, metric, pool, temperature,
             seed, report, k):
    """Cross-validated evaluation of the prototypical pipeline."""
    _run_eval("eval", audio, audio_meta, text, text_meta, k, head, metric, pool,
              temperature, seed, report)


@cli.command("zeroshot")
@_eval_options
def cmd_zeroshot(audio, audio_meta, text, text_meta, head, metric, pool, temperature,
                 seed, report):
    """Zero-shot baseline: score queries against the text anchors directly."""
    _run_eval("zeroshot", audio, audio_meta, text, text_meta, None, head, metric, pool,
              temperature, seed, report)


@cli.command("sweep")
@click.option("--mode", type=click.Choice(["k", "prompt"]), required=True)
@click.option("--audio", required=True)
@click.option("--audio-meta", required=True)
@click.option("--text", default=None, help="Text anchors (k mode).")
@click.option("--text-meta", default=None)
@click.option("--k-values", default=None,
              help="Comma-separated cluster sizes, e.g. 20,25,30 (k mode).")
@click.option("--templates", default=None,
              help="JSON file of prompt templates (prompt mode); defaults to the stock five.")
@click.option("--prompt-embeddings", default=None,
              help="EMBT file whose sidecar ids are rendered prompt strings (prompt mode).")
@click.option("--prompt-embeddings-meta", default=None)
@click.option("--labels", default=None,
              help="Comma-separated class names (prompt mode); defaults to labels in the audio meta.")
@click.option("--k", type=click.IntRange(min=1), default=DEFAULT_K, show_default=True,
              help="Cluster size used in prompt mode.")
@click.option("--head", type=click.Choice(["single", "multi"]), default="single",
              show_default=True)
@click.option("--zeroshot", is_flag=True, default=False,
              help="Sweep the zero-shot head instead of the prototypical one (prompt mode).")
@click.option("--pool", type=click.Choice(["train_folds_only", "all_audio"]),
              default="train_folds_only", show_default=True)
@click.option("--temperature", type=click.FloatRange(min=0, min_open=True), default=1.0,
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker cap; PROTO_ANCHOR_THREADS overrides.")
@click.option("--out-csv", required=True)
def cmd_sweep(mode, audio, audio_meta, text, text_meta, k_values, templates,
              prompt_embeddings, prompt_embeddings_meta, labels, k, head, zeroshot,
              pool, temperature, seed, threads, out_csv):
    """Sweep cluster sizes or prompt templates; write one CSV row per point."""
    audio_table = load_table(audio, audio_meta)
    config = {
        "command": "sweep", "mode": mode, "audio": str(audio),
        "audio_meta": str(audio_meta), "head": head, "pool_policy": pool,
        "temperature": temperature, "seed": seed,
    }
    if mode == "k":
        if text is None or text_meta is None or k_values is None:
            raise click.UsageError("--mode k requires --text, --text-meta and --k-values")
        try:
            ks = [int(v) for v in k_values.split(",") if v.strip()]
        except ValueError as e:
            raise click.UsageError(f"bad --k-values: {e}")
        if not ks or any(v < 1 for v in ks):
            raise click.UsageError("--k-values must be positive integers")
        text_table = load_table(text, text_meta)
        pipeline_head = ("zeroshot_" if zeroshot else "proto_") + head
        rows = sweep_k(audio_table, text_table, ks, pipeline_head, pool,
                       temperature=temperature, threads=resolve_threads(threads))
        config.update({"text": str(text), "text_meta": str(text_meta), "k_values": ks})
        write_sweep_csv(rows, out_csv, ("k", "metric"))
    else:
        if prompt_embeddings is None or prompt_embeddings_meta is None:
            raise click.UsageError(
                "--mode prompt requires --prompt-embeddings and --prompt-embeddings-meta"
            )
        template_list = (
            _load_templates(templates) if templates else list(STANDARD_TEMPLATES)
        )
        lookup_table = load_table(prompt_embeddings, prompt_embeddings_meta)
        lookup = {m.id: row for m, row in zip(lookup_table.meta, lookup_table.rows)}
        if labels:
            label_names = [v for v in labels.split(",") if v]
        else:
            label_names = sorted({
                lab for m in audio_table.meta for lab in (m.labels or [])
            })
        if not label_names:
            raise click.UsageError("no class labels found; pass --labels")
        pipeline_head = ("zeroshot_" if zeroshot else "proto_") + head
        results = sweep_prompts(audio_table, label_names, template_list, lookup,
                                pipeline_head, k=k, pool_policy=pool,
                                temperature=temperature)
        rows = [(_template_label(t), v) for t, v in results]
        config.update({
            "k": k,
            "templates": [
                {"pattern": t.pattern, "case_mode": t.case_mode} for t in template_list
            ],
            "prompt_embeddings": str(prompt_embeddings),
            "labels": label_names,
        })
        write_sweep_csv(rows, out_csv, ("prompt", "metric"))
    _write_config_sidecar(out_csv, config)


@cli.command("synth")
@click.option("--classes", type=click.IntRange(min=1), required=True)
@click.option("--dim", type=click.IntRange(min=2), required=True)
@click.option("--per-class", type=click.IntRange(min=1), required=True)
@click.option("--audio-noise", type=click.FloatRange(min=0), default=0.3, show_default=True)
@click.option("--anchor-noise", type=click.FloatRange(min=0), default=0.6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--overlap", type=click.FloatRange(min=0, max=1, max_open=True), default=0.0,
              show_default=True, help="Probability a clip gains a second class.")
@click.option("--folds", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--out-prefix", required=True)
def cmd_synth(classes, dim, per_class, audio_noise, anchor_noise, seed, overlap,
              folds, out_prefix):
    """Generate a synthetic embedding task as EMBT + JSONL files."""
    spec = SynthSpec(classes, dim, per_class, audio_noise, anchor_noise, seed,
                     multilabel_overlap=overlap, n_folds=folds)
    data = generate_synthetic(spec)
    write_table(data.audio, f"{out_prefix}_audio.embt", f"{out_prefix}_audio.jsonl")
    write_table(data.text, f"{out_prefix}_text.embt", f"{out_prefix}_text.jsonl")
    _write_config_sidecar(f"{out_prefix}_audio.embt", {
        "command": "synth", "classes": classes, "dim": dim, "per_class": per_class,
        "audio_noise": audio_noise, "anchor_noise": anchor_noise, "seed": seed,
        "overlap": overlap, "folds": folds, "out_prefix": str(out_prefix),
    })


def main(argv=None) -> int:
    """Console entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        return 1
    except (ProtoAnchorError, OSError, json.JSONDecodeError) as e:
        click.echo(f"error: {e}", err=True)
        return 3
    except Exception as e:  # internal invariant violation
        click.echo(f"internal error: {e}", err=True)
        return 4


if __name__ == "__main__":
    sys.exit(main())
