# Population-scale comparison of two classifiers trained on different
# stratified samples: per-class agreement counts with Agresti-Coull
# intervals, plus a seeded disagreement sample for re-annotation.

from forumstrata import (
    SampleSpec,
    SelectionRule,
    SynthConfig,
    TrainConfig,
    VectorizerConfig,
    agreement,
    disagreement_sample,
    distribution,
    documents_for_population,
    fit_transform,
    generate,
    ingest,
    oversample,
    project,
    sample,
    train,
    predict,
    transform,
)
from forumstrata.centrality import post_degree
from forumstrata.evaluation import cohen_kappa, fleiss_kappa, format_agreement_table

cfg = SynthConfig(
    n_members=4000,
    n_threads=600,
    activity_exponent=2.2,
    class_mix={"not_criminal": 0.7, "spam": 0.15, "trading_credentials": 0.15},
    class_centrality_bias={"spam": 4.0, "trading_credentials": 4.0},
    plain_classes=frozenset({"not_criminal"}),
    vocab_per_class=80,
    seed=23,
)
records, labels = generate(cfg)
pop = project(ingest(records), SelectionRule())
dist = distribution(pop, post_degree(pop), 300)
docs_all = documents_for_population(pop, labels)
doc_by_id = {d.post_id: d for d in docs_all}

predictions = {}
for strategy in ("proportional", "uniform"):
    drawn = sample(pop, dist, SampleSpec(strategy=strategy, size=300, seed=6))
    docs = [doc_by_id[e.post_id] for e in drawn.entries]
    space, matrix = fit_transform(docs, VectorizerConfig(min_df=2))
    balanced, _ = oversample(matrix, seed=6)
    model = train(balanced, TrainConfig(seed=6), vocab_hash=space.vocab_hash())
    predicted, _ = predict(model, transform(space, docs_all))
    predictions[strategy] = dict(zip((d.post_id for d in docs_all), predicted))

report = agreement(predictions["proportional"], predictions["uniform"])
print(format_agreement_table(report, title="A = proportional, B = uniform"))

picked = disagreement_sample(
    predictions["proportional"], predictions["uniform"], per_class=25, seed=6
)
print(f"disagreement sample for manual re-annotation: {len(picked)} posts")

# the same chance-corrected agreement statistics used for human annotators
a = ["spam", "spam", "ok", "ok"]
b = ["spam", "ok", "ok", "ok"]
print("\nCohen's kappa on a toy annotation pair:", cohen_kappa(a, b).value)
print("Fleiss's kappa, three raters all agreeing:",
      fleiss_kappa([[3, 0], [0, 3]]).value)
