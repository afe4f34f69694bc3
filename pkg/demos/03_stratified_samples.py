# Proportional and uniform stratified samples from an induced distribution,
# with reuse of already-annotated posts.

from collections import Counter

from forumstrata import (
    SampleSpec,
    SelectionRule,
    SynthConfig,
    distribution,
    generate,
    ingest,
    project,
    sample,
)
from forumstrata.centrality import post_degree

records, labels = generate(
    SynthConfig(n_members=1200, n_threads=250, activity_exponent=2.2, seed=9)
)
pop = project(ingest(records), SelectionRule())
dist = distribution(pop, post_degree(pop), 300)
print("bins:", [f"<{b.upper_bound:.0f} ({b.mass:.3f})" for b in dist.bins])

# proportional: per-bin quotas follow the population masses
prop = sample(pop, dist, SampleSpec(strategy="proportional", size=300, seed=1))
print("\nproportional quotas:", prop.quotas)
print("achieved fractions: ", [round(f, 3) for f in prop.achieved_distribution])

# uniform: equal quotas regardless of the masses
unif = sample(pop, dist, SampleSpec(strategy="uniform", size=300, seed=1))
print("uniform quotas:     ", unif.quotas)

# fixed seed -> identical sample, byte for byte
again = sample(pop, dist, SampleSpec(strategy="proportional", size=300, seed=1))
print("\nsame seed reproduces the sample:", again.to_csv() == prop.to_csv())

# an existing annotated pool is reused before drawing anything new
already_annotated = frozenset(
    (e.post_id, labels[e.post_id]) for e in prop.entries[:120]
)
reused = sample(
    pop,
    dist,
    SampleSpec(strategy="proportional", size=300, seed=2, reuse_pool=already_annotated),
)
flags = Counter(e.reused for e in reused.entries)
print(f"reuse-first draw: {flags[True]} reused, {flags[False]} newly drawn")
