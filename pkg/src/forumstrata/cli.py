"""Command-line interface orchestrating the pipeline as subcommands.

Exit codes: 0 on success, 2 for validation problems (bad flags, bad
configuration), 3 for data errors (malformed corpus, empty population,
exhausted strata, ...).
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click

from . import centrality as centrality_mod
from . import classifier as clf
from . import evaluation, pipeline, strata, synth, textpipe
from .annotation import (
    AnnotationStore,
    CodingScheme,
    create_app,
    load_default_scheme,
    sample_bundle_from_population,
)
from .errors import DataError, ValidationError
from .graph import (
    SelectionRule,
    exclude_member,
    ForumGraph,
    ingest_jsonl_file,
    load_population,
    parse_timestamp,
    project,
    save_population,
)

EXIT_VALIDATION = 2
EXIT_DATA = 3


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except DataError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_DATA)

    return wrapper


def _read_predictions(path) -> dict[str, str]:
    preds: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["post_id", "class"]:
            raise DataError(f"{path}: expected CSV header post_id,class")
        for row in reader:
            if row:
                preds[row[0]] = row[1]
    return preds


def _write_predictions(path, preds: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["post_id", "class"])
        for pid in preds:
            writer.writerow([pid, preds[pid]])


def _rule_from_options(post_types, boards, cutoff, exclude_members) -> SelectionRule:
    return SelectionRule(
        post_type_filter=frozenset(
            t.strip() for t in post_types.split(",") if t.strip()
        )
        if post_types
        else frozenset(),
        board_filter=(
            frozenset(b.strip() for b in boards.split(",") if b.strip())
            if boards
            else None
        ),
        cutoff=parse_timestamp(cutoff) if cutoff else None,
        excluded_members=frozenset(exclude_members),
    )


@click.group()
def cli():
    """Graph-based stratified sampling for forum text classification."""


@cli.command("synth")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--members", type=int, default=None)
@click.option("--threads", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--labels", "labels_path", required=True, type=click.Path())
@handle_errors
def synth_cmd(config_path, members, threads, alpha, seed, out_path, labels_path):
    """Generate a synthetic corpus and its ground-truth labels."""
    data = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if members is not None:
        data["n_members"] = members
    if threads is not None:
        data["n_threads"] = threads
    if alpha is not None:
        data["activity_exponent"] = alpha
    if seed is not None:
        data["seed"] = seed
    config = synth.SynthConfig.from_json(data) if data else synth.SynthConfig()
    stats = synth.write_corpus(config, out_path, labels_path)
    click.echo(json.dumps(stats, indent=2))


@cli.command("ingest")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--exclude-member", "exclude_members", multiple=True)
@handle_errors
def ingest_cmd(corpus, out_path, exclude_members):
    """Ingest a JSON-lines corpus into a graph snapshot."""
    graph = ingest_jsonl_file(corpus)
    for member in exclude_members:
        graph = exclude_member(graph, member)
    graph.save(out_path)
    click.echo(json.dumps(graph.stats(), indent=2))


@cli.command("stats")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@handle_errors
def stats_cmd(graph_path):
    """Print node and edge counts for a graph snapshot."""
    graph = ForumGraph.load(graph_path)
    s = graph.stats()
    click.echo("Kind        Count")
    click.echo("----        -----")
    click.echo(f"member      {s['members']}")
    click.echo(f"thread      {s['threads']}")
    click.echo(f"board       {s['boards']}")
    click.echo(f"forum       {s['forums']}")
    click.echo(f"post        {s['post_edges']}")
    click.echo(f"interact    {s['interact_edges']}")


@cli.command("project")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--post-types", default="", help="comma-separated, e.g. offer,request")
@click.option("--boards", default="", help="comma-separated board ids or labels")
@click.option("--cutoff", default="", help="RFC3339 timestamp; newer posts excluded")
@click.option("--exclude-member", "exclude_members", multiple=True)
@handle_errors
def project_cmd(graph_path, out_path, post_types, boards, cutoff, exclude_members):
    """Project a population out of a graph snapshot by a selection rule."""
    graph = ForumGraph.load(graph_path)
    rule = _rule_from_options(post_types, boards, cutoff, exclude_members)
    pop = project(graph, rule)
    save_population(pop, out_path)
    click.echo(
        json.dumps(
            {
                "members": pop.n_members,
                "threads": pop.n_threads,
                "posts": pop.n_posts,
                "interact_edges": int(pop.A.nnz),
            },
            indent=2,
        )
    )


@cli.command("centrality")
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option(
    "--metric",
    type=click.Choice(["post", "thread", "eigenvector", "betweenness"]),
    required=True,
)
@click.option("--tol", type=float, default=centrality_mod.DEFAULT_TOL)
@click.option("--max-iter", type=int, default=centrality_mod.DEFAULT_MAX_ITER)
@click.option("--node-limit", type=int, default=centrality_mod.DEFAULT_NODE_LIMIT)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--meta", "meta_path", default=None, type=click.Path())
@handle_errors
def centrality_cmd(pop_path, metric, tol, max_iter, node_limit, out_path, meta_path):
    """Compute a member centrality metric over a population."""
    pop = load_population(pop_path)
    name = {
        "post": centrality_mod.POST_DEGREE,
        "thread": centrality_mod.THREAD_DEGREE,
        "eigenvector": centrality_mod.EIGENVECTOR,
        "betweenness": centrality_mod.BETWEENNESS,
    }[metric]
    kwargs = {}
    if name == centrality_mod.EIGENVECTOR:
        kwargs = {"tol": tol, "max_iter": max_iter}
    elif name == centrality_mod.BETWEENNESS:
        kwargs = {"node_limit": node_limit}
    cv = centrality_mod.compute(pop, name, **kwargs)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["member_id", "value"])
        for mid, value in zip(cv.member_ids, cv.values):
            writer.writerow([mid, repr(float(value))])
    meta = {"metric": cv.metric, "members": len(cv), **cv.meta}
    if meta_path is None:
        meta_path = str(Path(out_path).with_suffix(".meta.json"))
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    click.echo(json.dumps(meta, indent=2))


@cli.command("distribution")
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option(
    "--metric",
    type=click.Choice(["post", "thread", "eigenvector"]),
    default="post",
)
@click.option("--sample-size", "sample_size", type=int, required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def distribution_cmd(pop_path, metric, sample_size, out_path):
    """Induce and merge the post distribution for an intended sample size."""
    pop = load_population(pop_path)
    name = {
        "post": centrality_mod.POST_DEGREE,
        "thread": centrality_mod.THREAD_DEGREE,
        "eigenvector": centrality_mod.EIGENVECTOR,
    }[metric]
    cv = centrality_mod.compute(pop, name)
    dist = strata.distribution(pop, cv, sample_size)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(dist.to_json(), fh, indent=2)
    click.echo(json.dumps(dist.to_json(), indent=2))


@cli.command("sample")
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option(
    "--metric",
    type=click.Choice(["post", "thread", "eigenvector"]),
    default="post",
)
@click.option(
    "--strategy",
    type=click.Choice([strata.PROPORTIONAL, strata.UNIFORM]),
    required=True,
)
@click.option("--size", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--reuse", "reuse_path", default=None, type=click.Path(exists=True))
@click.option("--max-posts", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def sample_cmd(pop_path, metric, strategy, size, seed, reuse_path, max_posts, out_path):
    """Draw a stratified sample from a population distribution."""
    pop = load_population(pop_path)
    name = {
        "post": centrality_mod.POST_DEGREE,
        "thread": centrality_mod.THREAD_DEGREE,
        "eigenvector": centrality_mod.EIGENVECTOR,
    }[metric]
    cv = centrality_mod.compute(pop, name)
    # small annotation batches are fine; the 25/S merge floor still applies
    # to a statistically sized distribution
    dist = strata.distribution(pop, cv, max(size, strata.MIN_PER_BIN))
    reuse_pool = None
    if reuse_path:
        reuse_pool = frozenset(_read_predictions(reuse_path).items())
    spec = strata.SampleSpec(
        strategy=strategy, size=size, seed=seed, reuse_pool=reuse_pool,
        max_posts=max_posts,
    )
    result = strata.sample(pop, dist, spec)
    Path(out_path).write_text(result.to_csv(), encoding="utf-8")
    click.echo(
        json.dumps(
            {
                "entries": len(result.entries),
                "quotas": list(result.quotas),
                "reused": sum(e.reused for e in result.entries),
            },
            indent=2,
        )
    )


@cli.command("train")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--sample", "sample_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--min-df", type=int, default=2)
@click.option("--oversample-seed", type=int, default=0)
@handle_errors
def train_cmd(graph_path, sample_path, labels_path, out_dir, config_path, min_df, oversample_seed):
    """Train a classifier pipeline on a labeled sample."""
    graph = ForumGraph.load(graph_path)
    entries = strata.read_sample_csv(sample_path)
    labels = synth.read_labels_csv(labels_path)
    docs = textpipe.documents_from_graph(
        graph, [e.post_id for e in entries], labels
    )
    unlabeled = [d.post_id for d in docs if d.label is None]
    if unlabeled:
        raise DataError(
            f"{len(unlabeled)} sampled posts lack labels (e.g. {unlabeled[:3]})"
        )
    train_config = clf.TrainConfig()
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            train_config = clf.TrainConfig.from_json(json.load(fh))
    space, matrix = textpipe.fit_transform(
        docs, textpipe.VectorizerConfig(min_df=min_df)
    )
    balanced, _ = textpipe.oversample(matrix, seed=oversample_seed)
    model = clf.train(balanced, train_config, vocab_hash=space.vocab_hash())
    clf.save_pipeline(out_dir, space, model)
    click.echo(
        json.dumps(
            {"classes": list(model.classes), "features": model.n_features}, indent=2
        )
    )


@cli.command("predict")
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def predict_cmd(pop_path, model_dir, out_path):
    """Classify every population post with a trained pipeline."""
    pop = load_population(pop_path)
    space, model = clf.load_pipeline(model_dir)
    docs = textpipe.documents_for_population(pop)
    matrix = textpipe.transform(space, docs)
    labels, _ = clf.predict(model, matrix)
    _write_predictions(out_path, {d.post_id: lab for d, lab in zip(docs, labels)})
    click.echo(f"wrote {len(docs)} predictions to {out_path}")


@cli.command("holdout")
@click.option("--graph", "graph_path", required=True, type=click.Path(exists=True))
@click.option("--sample", "sample_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", required=True, type=click.Path(exists=True))
@click.option("--seeds", type=int, default=30, help="number of random seeds")
@click.option("--split", type=float, default=0.8)
@click.option("--stratify", type=click.Choice(["class", "bins"]), default="bins")
@click.option("--min-df", type=int, default=2)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def holdout_cmd(graph_path, sample_path, labels_path, seeds, split, stratify, min_df, out_path):
    """Repeated stratified holdout evaluation of a labeled sample."""
    graph = ForumGraph.load(graph_path)
    entries = strata.read_sample_csv(sample_path)
    labels = synth.read_labels_csv(labels_path)
    docs = textpipe.documents_from_graph(
        graph, [e.post_id for e in entries], labels
    )
    strata_keys = (
        [e.bin_index for e in entries] if stratify == "bins" else None
    )
    runs = clf.repeated_holdout(
        docs,
        seeds=list(range(seeds)),
        split=split,
        strata=strata_keys,
        vectorizer=textpipe.VectorizerConfig(min_df=min_df),
    )
    reports = [r.report for r in runs]
    aggregate = evaluation.aggregate_reports(reports)
    payload = {
        "seeds": seeds,
        "split": split,
        "stratify": stratify,
        "aggregate": aggregate.to_json(),
        "zero_prediction_rate": evaluation.zero_prediction_rate(reports),
        "per_seed": [r.to_json() for r in reports],
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    click.echo(evaluation.format_eval_table(aggregate))


@cli.command("agree")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
@click.option("--z", type=float, default=evaluation.DEFAULT_Z)
@click.option("--out", "out_path", default=None, type=click.Path())
@handle_errors
def agree_cmd(a_path, b_path, z, out_path):
    """Per-class agreement of two prediction CSVs over one population."""
    report = evaluation.agreement(
        _read_predictions(a_path), _read_predictions(b_path), z=z
    )
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
    click.echo(evaluation.format_agreement_table(report))


@cli.command("disagree-sample")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
@click.option("--per-class", type=int, default=100)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def disagree_sample_cmd(a_path, b_path, per_class, seed, out_path):
    """Seeded per-class sample of posts the two classifiers disagree on."""
    picked = evaluation.disagreement_sample(
        _read_predictions(a_path),
        _read_predictions(b_path),
        per_class=per_class,
        seed=seed,
    )
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("post_id\n")
        for pid in picked:
            fh.write(pid + "\n")
    click.echo(f"wrote {len(picked)} disagreement posts to {out_path}")


@cli.command("annotate-serve")
@click.option("--population", "pop_path", required=True, type=click.Path(exists=True))
@click.option("--sample", "sample_path", required=True, type=click.Path(exists=True))
@click.option("--sample-id", default="sample")
@click.option("--scheme", "scheme_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--tokens", "tokens_path", default=None, type=click.Path(exists=True))
@click.option("--ui", "ui_dir", default=None, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8470)
@handle_errors
def annotate_serve_cmd(
    pop_path, sample_path, sample_id, scheme_path, data_dir, tokens_path, ui_dir, host, port
):
    """Serve a sample for annotation over HTTP (Ctrl-C to stop)."""
    import uvicorn

    pop = load_population(pop_path)
    entries = strata.read_sample_csv(sample_path)
    scheme = CodingScheme.load(scheme_path) if scheme_path else load_default_scheme()
    bundle = sample_bundle_from_population(sample_id, pop, entries)
    store = AnnotationStore(data_dir)
    tokens = None
    admin_token = None
    if tokens_path:
        with open(tokens_path, "r", encoding="utf-8") as fh:
            token_cfg = json.load(fh)
        tokens = token_cfg.get("annotators", {})
        admin_token = token_cfg.get("admin")
    app = create_app(
        {sample_id: bundle},
        scheme,
        store,
        annotator_tokens=tokens,
        admin_token=admin_token,
        ui_dir=ui_dir,
    )
    click.echo(f"serving sample {sample_id!r} ({len(bundle.posts)} posts) on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@cli.command("report")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@handle_errors
def report_cmd(config_path, out_dir):
    """Run the full experiment pipeline from a config file."""
    config = pipeline.load_config(config_path)
    manifest = pipeline.run_experiment(
        config, out_dir, corpus_dir=Path(config_path).resolve().parent
    )
    click.echo(json.dumps(manifest, indent=2, sort_keys=True))


def main():
    cli(standalone_mode=True)


if __name__ == "__main__":
    main()
