"""Unified command-line entry point."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, evalmath, stats as stats_mod
from .backends import BackendPolicy, make_backend
from .config import PipelineConfig, load_config
from .errors import CapforgeError
from .evalmath import io as emb_io
from .pipeline import run as pipeline_run


@click.group()
@click.version_option(__version__)
def main():
    """capforge: audio caption generation and evaluation toolkit."""


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--resume", is_flag=True, help="Resume from an existing checkpoint.")
@click.option("--concurrency", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--shard-size", type=int, default=None)
@click.option("--max-attempts", type=int, default=None)
@click.option("--no-refine", is_flag=True, help="Skip the caption refinement step.")
@click.option("--no-chaining", is_flag=True, help="Merge the extraction prompts into one.")
@click.option("--no-fine-grained", is_flag=True,
              help="Drop speech/music detail from the caption prompt.")
@click.option("--backend", "backend_kind", type=click.Choice(["stub", "http"]),
              default=None)
@click.option("--limit", type=int, default=None, hidden=True,
              help="Process at most N items (interruption testing).")
@click.option("--progress-log", type=click.Path(dir_okay=False), default=None)
def generate(manifest_path, out_dir, config_path, resume, concurrency, seed,
             shard_size, max_attempts, no_refine, no_chaining, no_fine_grained,
             backend_kind, limit, progress_log):
    """Generate caption shards from an audio manifest."""
    cfg = load_config(config_path) if config_path else PipelineConfig()
    if concurrency is not None:
        cfg.concurrency = concurrency
    if seed is not None:
        cfg.seed = seed
    if shard_size is not None:
        cfg.shard_size = shard_size
    if max_attempts is not None:
        cfg.refine.max_attempts = max_attempts
    if no_refine:
        cfg.refine_enabled = False
    if no_chaining:
        cfg.chain.chaining_enabled = False
    if no_fine_grained:
        cfg.caption.fine_grained_enabled = False

    backend = make_backend(backend_kind, seed=cfg.seed, policy=BackendPolicy())

    log_fh = open(progress_log, "a", encoding="utf-8") if progress_log else sys.stderr

    def progress(event: dict) -> None:
        log_fh.write(json.dumps(event) + "\n")

    try:
        summary = pipeline_run(
            manifest_path, cfg, out_dir, backend,
            resume=resume, limit=limit, progress=progress,
        )
    except CapforgeError as exc:
        raise click.ClickException(str(exc))
    finally:
        if progress_log:
            log_fh.close()
    click.echo(json.dumps(summary.to_dict(), indent=2))


@main.command("stats")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--taxonomy", type=click.Path(exists=True, dir_okay=False))
@click.option("--stop-words", type=click.Path(exists=True, dir_okay=False))
@click.option("--top-words", type=int, default=100)
@click.option("--match-plurals", is_flag=True)
def stats_cmd(input_path, out_path, taxonomy, stop_words, top_words, match_plurals):
    """Compute corpus statistics over caption shards."""
    input_path = Path(input_path)
    files = sorted(input_path.glob("*.jsonl")) if input_path.is_dir() else [input_path]

    def captions():
        for path in files:
            if path.name in ("records.jsonl", "failures.jsonl"):
                continue
            with path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    row = json.loads(line)
                    yield row["caption"] if isinstance(row, dict) and "caption" in row else str(row)

    corpus = stats_mod.corpus_stats(captions())
    tax = (
        stats_mod.FineGrainedTaxonomy.from_file(taxonomy)
        if taxonomy
        else stats_mod.FineGrainedTaxonomy()
    )
    fine = stats_mod.count_fine_grained(captions(), tax, match_plurals=match_plurals)
    stop = (
        stats_mod.load_stop_words(stop_words)
        if stop_words
        else stats_mod.DEFAULT_STOP_WORDS
    )
    freqs = stats_mod.word_frequencies(captions(), stop)

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    report = {
        "corpus": corpus.to_dict(),
        "fine_grained": fine.to_dict(),
        "top_words": [{"token": t, "count": c} for t, c in freqs[:top_words]],
    }
    out_path.write_text(json.dumps(report, indent=2), encoding="utf-8")
    stats_mod.length_histogram_export(corpus, out_path.with_suffix(".histogram.csv"))
    stats_mod.word_frequencies_export(freqs, out_path.with_suffix(".words.csv"), top=top_words)
    click.echo(f"wrote {out_path}")


@main.command("eval")
@click.option("--audio-emb", type=click.Path(exists=True, dir_okay=False))
@click.option("--text-emb", type=click.Path(exists=True, dir_okay=False))
@click.option("--metrics", default="infonce,recall",
              help="Comma list of: infonce, recall, zeroshot, aacnll.")
@click.option("--temperature", type=float, default=0.07)
@click.option("--ks", default="1,5,10", help="Comma list of k for R@k.")
@click.option("--classes", type=click.Path(exists=True, dir_okay=False),
              help="Class text file (one per line) for zeroshot.")
@click.option("--token-probs", type=click.Path(exists=True, dir_okay=False),
              help='JSON {"probs": [[...]], "targets": [...]} for aacnll.')
@click.option("--backend", "backend_kind", type=click.Choice(["stub", "http"]),
              default="stub")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(dir_okay=False))
def eval_cmd(audio_emb, text_emb, metrics, temperature, ks, classes, token_probs,
             backend_kind, seed, out_path):
    """Compute retrieval/captioning metrics over embedding files."""
    wanted = {m.strip() for m in metrics.split(",") if m.strip()}
    unknown = wanted - {"infonce", "recall", "zeroshot", "aacnll"}
    if unknown:
        raise click.UsageError(f"unknown metrics: {', '.join(sorted(unknown))}")

    report: dict = {
        "config": {
            "metrics": sorted(wanted),
            "temperature": temperature,
            "ks": ks,
            "seed": seed,
        }
    }

    try:
        if wanted & {"infonce", "recall"}:
            if not (audio_emb and text_emb):
                raise click.UsageError("--audio-emb and --text-emb are required")
            batch = evalmath.EmbeddingBatch(
                audio=emb_io.load_any(audio_emb), text=emb_io.load_any(text_emb)
            )
            sim = evalmath.similarity_matrix(batch)
            if "infonce" in wanted:
                total, loss_a, loss_t = evalmath.infonce_loss(
                    batch, evalmath.LossConfig(temperature=temperature)
                )
                report["infonce"] = {
                    "total": total,
                    "audio_mean": float(loss_a.mean()),
                    "text_mean": float(loss_t.mean()),
                }
            if "recall" in wanted:
                k_list = [int(k) for k in ks.split(",")]
                report["recall"] = [
                    r.to_dict() for r in evalmath.retrieval_report(sim, k_list)
                ]
        if "zeroshot" in wanted:
            if not (audio_emb and classes):
                raise click.UsageError("zeroshot needs --audio-emb and --classes")
            backend = make_backend(backend_kind, seed=seed)
            class_texts = [
                line.strip()
                for line in Path(classes).read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            from .backends.base import Embedding

            matrix = emb_io.load_any(audio_emb)
            predictions = []
            for row in matrix:
                idx, scores = evalmath.zero_shot_classify(
                    Embedding(values=np.asarray(row), normalized=True),
                    class_texts,
                    backend,
                )
                predictions.append({"predicted": idx, "scores": scores.tolist()})
            report["zeroshot"] = predictions
        if "aacnll" in wanted:
            if not token_probs:
                raise click.UsageError("aacnll needs --token-probs")
            data = json.loads(Path(token_probs).read_text(encoding="utf-8"))
            seq = evalmath.TokenDistributionSequence(
                probs=data["probs"], targets=list(data["targets"])
            )
            report["aacnll"] = evalmath.aac_nll(seq)
    except (CapforgeError, ValueError) as exc:
        raise click.ClickException(str(exc))

    text = json.dumps(report, indent=2)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    click.echo(text)


@main.command("embed-io")
@click.argument("src", type=click.Path(exists=True, dir_okay=False))
@click.argument("dst", type=click.Path(dir_okay=False))
def embed_io_cmd(src, dst):
    """Convert an embedding file between the binary and JSONL formats."""
    src, dst = Path(src), Path(dst)
    try:
        if src.suffix == ".jsonl":
            ids, matrix = emb_io.read_jsonl(src)
            emb_io.write_matrix(dst, matrix)
        else:
            matrix = emb_io.read_matrix(src)
            ids = [str(i) for i in range(matrix.shape[0])]
            emb_io.write_jsonl(dst, ids, matrix)
    except CapforgeError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {dst}")


@main.command("mos-serve")
@click.option("--items", "items_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8800)
@click.option("--media-dir", type=click.Path(file_okay=False, exists=True))
@click.option("--ui-dir", type=click.Path(file_okay=False, exists=True))
def mos_serve(items_path, log_path, host, port, media_dir, ui_dir):
    """Serve the MOS rating API (and the rating UI, if built)."""
    import uvicorn

    from .mosvc import RatingStore, create_app, load_items

    store = RatingStore(load_items(items_path), log_path=log_path)
    app = create_app(store, media_dir=media_dir, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


@main.command("stub-serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8900)
@click.option("--seed", type=int, default=0)
@click.option("--dim", type=int, default=64)
@click.option("--fixture", type=click.Path(exists=True, dir_okay=False),
              help="JSON fixture planting embedding cosines.")
def stub_serve(host, port, seed, dim, fixture):
    """Serve the deterministic stub backend over HTTP."""
    import uvicorn

    from .backends.stub_server import create_app

    app = create_app(seed=seed, dim=dim, fixture=fixture)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
