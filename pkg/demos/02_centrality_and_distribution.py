# Member centrality metrics over a population, the post distribution they
# induce, and log-scale bin merging for a target sample size.

import numpy as np

from forumstrata import (
    SelectionRule,
    SynthConfig,
    generate,
    ingest,
    project,
    induce,
    merge_bins,
    proportion_std_error,
)
from forumstrata.centrality import (
    betweenness_exact,
    eigenvector,
    post_degree,
    thread_degree,
)

records, _ = generate(
    SynthConfig(n_members=800, n_threads=200, activity_exponent=2.1, seed=5)
)
pop = project(ingest(records), SelectionRule())

pd = post_degree(pop)
td = thread_degree(pop)
print("post degree:   max =", pd.values.max(), " total =", pd.values.sum())
print("thread degree: max =", td.values.max(),
      " (never exceeds post degree:", bool((td.values <= pd.values).all()), ")")

ev = eigenvector(pop, tol=1e-10, max_iter=2000)
print(f"eigenvector: {ev.meta['iterations']} iterations, "
      f"residual {ev.meta['residual']:.2e}, "
      f"lambda_max ~ {ev.meta['lambda_max_estimate']:.3f}")

# exact betweenness is gated: it is O(n*m) and refuses forum-scale graphs
small = project(
    ingest(records[:120]), SelectionRule()
)
bt = betweenness_exact(small)
print("betweenness on a small projection: top score", bt.values.max())

# every post inherits its author's metric value; bins sit on powers of ten
# (a bin holds values strictly below its bound)
dist = induce(pop, pd)
print("\nraw induced distribution")
for b in dist.bins:
    print(f"  < {b.upper_bound:>8.0f}: mass {b.mass:.4f}  ({b.count} posts)")

# merging guarantees every stratum can contribute at least 25 of S draws
S = 600
merged = merge_bins(dist, S)
print(f"\nmerged for S = {S} (floor {25 / S:.4f})")
for b in merged.bins:
    print(f"  < {b.upper_bound:>8.0f}: mass {b.mass:.4f}")

# sanity check scale for sample-vs-population proportion comparisons
p = merged.bins[0].mass
print(f"\nstd error of a proportion p={p:.3f} at n={S}: "
      f"{proportion_std_error(p, S):.4f}")
