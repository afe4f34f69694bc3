"""End-to-end experiment orchestration.

``run_experiment`` executes the whole methodology from one config: ingest
(or synthesize) the corpus, project the population, compute the chosen
centrality metric, build the merged distribution, draw the configured
stratified samples, run the repeated holdout per sample, and, when several
strategies are present, apply each trained classifier to the full
population, emitting the agreement report and a disagreement sample.

Every run directory receives a copy of its config and a manifest with
sha256 digests, so archived runs reproduce byte for byte.  A stage failure
aborts with the stage name; artifacts of completed stages stay on disk.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping, Optional

from . import centrality as centrality_mod
from . import classifier as clf
from . import evaluation, strata, synth, textpipe
from .annotation.scheme import CodingScheme
from .errors import DataError, ValidationError
from .graph import ForumGraph, SelectionRule, ingest, ingest_jsonl_file, project


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class StageError(DataError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def run_experiment(config: Mapping, out_dir, corpus_dir: Optional[Path] = None) -> dict:
    """Execute the full pipeline described by ``config`` into ``out_dir``.

    Returns the manifest dict (also written to manifest.json).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"stages": [], "inputs": {}, "outputs": {}}

    def record_output(path: Path) -> None:
        manifest["outputs"][str(path.relative_to(out))] = _sha256_file(path)

    def stage(name: str):
        manifest["stages"].append(name)
        return name

    # archive the config verbatim next to its outputs
    config_path = out / "config.json"
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
    record_output(config_path)

    try:
        stage("corpus")
        graph, labels = _load_corpus(config, out, manifest, corpus_dir)
    except Exception as exc:
        raise StageError("corpus", exc) from exc

    try:
        stage("project")
        rule = SelectionRule.from_json(config.get("rule", {}))
        pop = project(graph, rule)
    except Exception as exc:
        raise StageError("project", exc) from exc

    try:
        stage("centrality")
        metric = config.get("metric", centrality_mod.POST_DEGREE)
        eig_cfg = config.get("eigenvector", {})
        cv = centrality_mod.compute(
            pop,
            metric,
            **(
                {
                    "tol": eig_cfg.get("tol", centrality_mod.DEFAULT_TOL),
                    "max_iter": eig_cfg.get("max_iter", centrality_mod.DEFAULT_MAX_ITER),
                }
                if metric == centrality_mod.EIGENVECTOR
                else {}
            ),
        )
    except Exception as exc:
        raise StageError("centrality", exc) from exc

    sample_cfg = config.get("sample", {})
    S = sample_cfg.get("size", 1500)
    seed = sample_cfg.get("seed", 0)
    strategies = sample_cfg.get("strategies", [strata.PROPORTIONAL])

    try:
        stage("distribution")
        dist = strata.distribution(pop, cv, S)
        dist_path = out / "distribution.json"
        with open(dist_path, "w", encoding="utf-8") as fh:
            json.dump(dist.to_json(), fh, indent=2)
        record_output(dist_path)
    except Exception as exc:
        raise StageError("distribution", exc) from exc

    samples: dict[str, strata.StratifiedSample] = {}
    try:
        stage("sample")
        for strategy in strategies:
            spec = strata.SampleSpec(strategy=strategy, size=S, seed=seed)
            s = strata.sample(pop, dist, spec)
            samples[strategy] = s
            path = out / f"sample_{strategy}.csv"
            path.write_text(s.to_csv(), encoding="utf-8")
            record_output(path)
    except Exception as exc:
        raise StageError("sample", exc) from exc

    if labels is None:
        manifest["note"] = (
            "no labels available: samples written for annotation; train/eval "
            "stages skipped"
        )
        _write_manifest(out, manifest)
        return manifest

    holdout_cfg = config.get("holdout", {})
    n_seeds = holdout_cfg.get("seeds", 30)
    split = holdout_cfg.get("split", 0.8)
    train_config = clf.TrainConfig.from_json(config.get("classifier", {})) if config.get("classifier") else clf.TrainConfig()
    vec_config = textpipe.VectorizerConfig(
        min_df=config.get("vectorizer", {}).get("min_df", 2),
        max_features=config.get("vectorizer", {}).get("max_features"),
    )
    z = config.get("z", evaluation.DEFAULT_Z)

    # optional coding scheme: fixes the class order and folds rare classes
    # into their merge target before any training
    class_order = None
    if config.get("scheme"):
        scheme_path = Path(config["scheme"])
        if corpus_dir is not None and not scheme_path.is_absolute():
            scheme_path = corpus_dir / scheme_path
        manifest["inputs"][str(scheme_path)] = _sha256_file(scheme_path)
        scheme = CodingScheme.load(scheme_path)
        labels = {pid: scheme.merge(cls) for pid, cls in labels.items()}
        class_order = scheme.effective_class_ids()

    pop_docs = textpipe.documents_for_population(pop, labels)
    doc_by_id = {d.post_id: d for d in pop_docs}

    models: dict[str, tuple[textpipe.VectorSpace, clf.LinearModel]] = {}
    try:
        stage("holdout")
        for strategy, s in samples.items():
            sample_docs = [doc_by_id[e.post_id] for e in s.entries]
            bins = [e.bin_index for e in s.entries]
            missing = [d.post_id for d in sample_docs if d.label is None]
            if missing:
                raise DataError(
                    f"{len(missing)} sampled posts lack labels (e.g. {missing[:3]})"
                )
            runs = clf.repeated_holdout(
                sample_docs,
                seeds=list(range(n_seeds)),
                split=split,
                strata=bins,
                vectorizer=vec_config,
                train_config=train_config,
                class_order=class_order,
            )
            aggregate = evaluation.aggregate_reports([r.report for r in runs])
            report_path = out / f"holdout_{strategy}.json"
            with open(report_path, "w", encoding="utf-8") as fh:
                json.dump(
                    {
                        "strategy": strategy,
                        "seeds": n_seeds,
                        "split": split,
                        "aggregate": aggregate.to_json(),
                        "zero_prediction_rate": evaluation.zero_prediction_rate(
                            [r.report for r in runs]
                        ),
                        "per_seed": [r.report.to_json() for r in runs],
                    },
                    fh,
                    indent=2,
                )
            record_output(report_path)
            table_path = out / f"holdout_{strategy}.txt"
            table_path.write_text(
                evaluation.format_eval_table(
                    aggregate, title=f"{strategy} sample, {n_seeds}-seed holdout"
                ),
                encoding="utf-8",
            )
            record_output(table_path)

            # full-sample model for population-scale comparison
            space, matrix = textpipe.fit_transform(sample_docs, vec_config)
            balanced, _ = textpipe.oversample(matrix, seed=seed)
            model = clf.train(
                balanced,
                train_config,
                class_order=class_order,
                vocab_hash=space.vocab_hash(),
            )
            models[strategy] = (space, model)
    except StageError:
        raise
    except Exception as exc:
        raise StageError("holdout", exc) from exc

    if len(models) >= 2:
        try:
            stage("agreement")
            names = sorted(models)
            a_name, b_name = names[0], names[1]
            preds = {}
            for name in (a_name, b_name):
                space, model = models[name]
                matrix = textpipe.transform(space, pop_docs)
                labels_pred, _ = clf.predict(model, matrix)
                preds[name] = {
                    d.post_id: lab for d, lab in zip(pop_docs, labels_pred)
                }
            report = evaluation.agreement(preds[a_name], preds[b_name], z=z)
            agree_path = out / f"agreement_{a_name}_vs_{b_name}.json"
            with open(agree_path, "w", encoding="utf-8") as fh:
                json.dump(report.to_json(), fh, indent=2)
            record_output(agree_path)
            table_path = out / f"agreement_{a_name}_vs_{b_name}.txt"
            table_path.write_text(
                evaluation.format_agreement_table(
                    report, title=f"A = {a_name}, B = {b_name}"
                ),
                encoding="utf-8",
            )
            record_output(table_path)

            per_class = config.get("disagreement_per_class", 100)
            picked = evaluation.disagreement_sample(
                preds[a_name], preds[b_name], per_class=per_class, seed=seed
            )
            dis_path = out / "disagreement_sample.csv"
            with open(dis_path, "w", encoding="utf-8") as fh:
                fh.write("post_id\n")
                for pid in picked:
                    fh.write(pid + "\n")
            record_output(dis_path)
        except StageError:
            raise
        except Exception as exc:
            raise StageError("agreement", exc) from exc

    _write_manifest(out, manifest)
    return manifest


def _load_corpus(
    config: Mapping, out: Path, manifest: dict, corpus_dir: Optional[Path]
) -> tuple[ForumGraph, Optional[dict[str, str]]]:
    labels: Optional[dict[str, str]] = None
    if "synth" in config:
        scfg = synth.SynthConfig.from_json(config["synth"])
        records, labels = synth.generate(scfg)
        graph = ingest(records)
        corpus_path = out / "corpus.jsonl"
        corpus_path.write_text(synth.corpus_jsonl(records), encoding="utf-8")
        manifest["outputs"][str(corpus_path.relative_to(out))] = _sha256_file(
            corpus_path
        )
        labels_path = out / "labels.csv"
        labels_path.write_text(synth.labels_csv(labels), encoding="utf-8")
        manifest["outputs"][str(labels_path.relative_to(out))] = _sha256_file(
            labels_path
        )
        return graph, labels

    corpus = config.get("corpus")
    if not corpus:
        raise ValidationError("config needs either a 'synth' section or a 'corpus' path")
    corpus_path = Path(corpus)
    if corpus_dir is not None and not corpus_path.is_absolute():
        corpus_path = corpus_dir / corpus_path
    manifest["inputs"][str(corpus_path)] = _sha256_file(corpus_path)
    graph = ingest_jsonl_file(corpus_path)
    if config.get("labels"):
        labels_path = Path(config["labels"])
        if corpus_dir is not None and not labels_path.is_absolute():
            labels_path = corpus_dir / labels_path
        manifest["inputs"][str(labels_path)] = _sha256_file(labels_path)
        labels = synth.read_labels_csv(labels_path)
    excluded = config.get("exclude_members") or []
    for member in excluded:
        from .graph import exclude_member

        graph = exclude_member(graph, member)
    return graph, labels


def _write_manifest(out: Path, manifest: dict) -> None:
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
