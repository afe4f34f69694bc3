"""Induced post distributions and stratified sample generation.

Every post inherits its author's centrality value; binning those values on
integer log-10 boundaries yields the *induced* distribution: the fraction of
population posts associated with members in each value range.  A bin holds
posts of members whose value is strictly less than the bin's upper bound.

Before sampling S posts, adjacent bins are merged (ascending) until each
holds at least a 25/S fraction of the posts, so every stratum can contribute
at least 25 elements.  Two strategies are supported:

  proportional  per-bin quotas follow the population masses
                (largest-remainder rounding, so quotas sum to S exactly)
  uniform       equal quotas per bin (remainder to the lowest bins)

Within a bin, posts from the reuse pool are taken first in lexicographic
post_id order; the rest are drawn uniformly at random without replacement
from a seeded generator, so a fixed seed reproduces the sample byte for
byte.  Per-bin generators are derived from (seed, bin_index), which keeps
bins independent and order-insensitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .centrality import CentralityVector
from .errors import BinExhaustedError, DataError, ValidationError
from .graph import PopulationGraph

MIN_PER_BIN = 25

PROPORTIONAL = "proportional"
UNIFORM = "uniform"
STRATEGIES = (PROPORTIONAL, UNIFORM)


@dataclass(frozen=True)
class Bin:
    upper_bound: float          # exclusive
    mass: float
    post_indices: np.ndarray    # indices into the population post tuple

    @property
    def count(self) -> int:
        return int(self.post_indices.size)


@dataclass(frozen=True)
class InducedDistribution:
    metric: str
    bins: tuple[Bin, ...]
    total_posts: int
    S_context: Optional[int] = None

    @property
    def masses(self) -> list[float]:
        return [b.mass for b in self.bins]

    @property
    def upper_bounds(self) -> list[float]:
        return [b.upper_bound for b in self.bins]

    def bin_index_for_value(self, value: float) -> int:
        """Bin holding a member value; values past the top bound clamp to the last bin."""
        for i, b in enumerate(self.bins):
            if value < b.upper_bound:
                return i
        return len(self.bins) - 1

    def to_json(self) -> dict:
        return {
            "metric": self.metric,
            "total_posts": self.total_posts,
            "sample_size_context": self.S_context,
            "bins": [
                {
                    "upper_bound": b.upper_bound,
                    "mass": b.mass,
                    "post_count": b.count,
                }
                for b in self.bins
            ],
        }


def _decade_exponent(value: float) -> int:
    """Smallest integer e with value < 10**e (so 9 -> 1, 10 -> 2, 0.2 -> 0)."""
    e = math.floor(math.log10(value)) + 1
    # guard against log10 rounding near exact powers of ten
    while value >= 10.0 ** e:
        e += 1
    while value < 10.0 ** (e - 1):
        e -= 1
    return e


def induce(pop: PopulationGraph, cv: CentralityVector) -> InducedDistribution:
    """Distribution of population posts induced by a member centrality vector.

    Each post contributes mass 1/total_posts to the decade bin of its
    author's value.  Members with value exactly zero (possible for
    eigenvector centrality on disconnected graphs) are assigned to the
    lowest occupied bin.  Raises if every member scores zero.
    """
    if tuple(cv.member_ids) != tuple(pop.member_ids):
        raise ValidationError("centrality vector was not computed on this population")
    values = np.asarray(cv.values, dtype=np.float64)
    if np.all(values == 0):
        raise DataError("all centrality values are zero; no distribution to induce")
    if np.any(values < 0):
        raise DataError("centrality values must be non-negative")

    member_value = {m: values[i] for i, m in enumerate(pop.member_ids)}
    exponents = sorted(
        {_decade_exponent(v) for v in values if v > 0}
    )
    bound_to_bin = {e: i for i, e in enumerate(exponents)}

    per_bin: list[list[int]] = [[] for _ in exponents]
    for idx, post in enumerate(pop.posts):
        v = member_value[post.member_id]
        if v > 0:
            per_bin[bound_to_bin[_decade_exponent(v)]].append(idx)
        else:
            per_bin[0].append(idx)

    total = len(pop.posts)
    bins = tuple(
        Bin(
            upper_bound=10.0 ** e,
            mass=len(indices) / total,
            post_indices=np.asarray(sorted(indices), dtype=np.int64),
        )
        for e, indices in zip(exponents, per_bin)
    )
    return InducedDistribution(metric=cv.metric, bins=bins, total_posts=total)


def merge_bins(dist: InducedDistribution, S: int) -> InducedDistribution:
    """Merge adjacent bins (ascending) until each mass is >= 25/S.

    The merged bin keeps the upper bound of its rightmost constituent.  If
    the final accumulated bin is underweight it folds into its left
    neighbour.  Requires S >= 25 and at least 25 posts overall.
    """
    if S < MIN_PER_BIN:
        raise ValidationError(f"sample size must be >= {MIN_PER_BIN}, got {S}")
    if dist.total_posts < MIN_PER_BIN:
        raise DataError(
            f"population holds {dist.total_posts} posts; at least "
            f"{MIN_PER_BIN} are needed for a valid binning"
        )
    threshold = MIN_PER_BIN / S

    merged: list[Bin] = []
    acc_mass = 0.0
    acc_posts: list[np.ndarray] = []
    acc_bound = 0.0
    for b in dist.bins:
        acc_mass += b.mass
        acc_posts.append(b.post_indices)
        acc_bound = b.upper_bound
        if acc_mass >= threshold:
            merged.append(
                Bin(acc_bound, acc_mass, np.concatenate(acc_posts))
            )
            acc_mass = 0.0
            acc_posts = []
    if acc_posts:
        if merged:
            left = merged.pop()
            merged.append(
                Bin(
                    acc_bound,
                    left.mass + acc_mass,
                    np.concatenate([left.post_indices] + acc_posts),
                )
            )
        else:
            merged.append(Bin(acc_bound, acc_mass, np.concatenate(acc_posts)))

    return InducedDistribution(
        metric=dist.metric,
        bins=tuple(merged),
        total_posts=dist.total_posts,
        S_context=S,
    )


def distribution(
    pop: PopulationGraph, cv: CentralityVector, S: int
) -> InducedDistribution:
    """Convenience: induce and merge for an intended sample size."""
    return merge_bins(induce(pop, cv), S)


@dataclass(frozen=True)
class SampleSpec:
    strategy: str
    size: int
    seed: int = 0
    reuse_pool: Optional[frozenset[tuple[str, str]]] = None  # (post_id, label)
    max_posts: Optional[int] = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(
                f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}"
            )
        if self.size < 1:
            raise ValidationError("sample size must be positive")
        if self.max_posts is not None and self.size > self.max_posts:
            raise ValidationError(
                f"sample size {self.size} exceeds max_posts cap {self.max_posts}"
            )
        if self.reuse_pool is not None:
            object.__setattr__(self, "reuse_pool", frozenset(self.reuse_pool))


@dataclass(frozen=True)
class SampleEntry:
    post_id: str
    member_id: str
    bin_index: int
    reused: bool


@dataclass(frozen=True)
class StratifiedSample:
    entries: tuple[SampleEntry, ...]
    spec: SampleSpec
    achieved_distribution: tuple[float, ...]
    quotas: tuple[int, ...]

    def post_ids(self) -> list[str]:
        return [e.post_id for e in self.entries]

    def to_csv(self) -> str:
        lines = ["post_id,member_id,bin,reused"]
        for e in self.entries:
            lines.append(
                f"{e.post_id},{e.member_id},{e.bin_index},{int(e.reused)}"
            )
        return "\n".join(lines) + "\n"


def proportional_quotas(masses: Sequence[float], S: int) -> list[int]:
    """Largest-remainder quotas: floor(mass*S) plus top remainders to sum S."""
    raw = [m * S for m in masses]
    quotas = [int(math.floor(r)) for r in raw]
    remainder = S - sum(quotas)
    by_frac = sorted(
        range(len(masses)), key=lambda i: (-(raw[i] - quotas[i]), i)
    )
    for i in by_frac[:remainder]:
        quotas[i] += 1
    return quotas


def uniform_quotas(n_bins: int, S: int) -> list[int]:
    """Equal quotas, remainder spread to the lowest-index bins."""
    base, extra = divmod(S, n_bins)
    return [base + (1 if i < extra else 0) for i in range(n_bins)]


def sample(
    pop: PopulationGraph,
    dist: InducedDistribution,
    spec: SampleSpec,
) -> StratifiedSample:
    """Draw a stratified sample of spec.size posts from the population.

    Per-bin quotas follow the strategy; inside a bin, reuse-pool posts are
    taken first (lexicographic post_id), then a seeded uniform draw without
    replacement fills the rest.  Fails with the bin index and shortfall if a
    stratum cannot meet its quota.
    """
    S = spec.size
    n_bins = len(dist.bins)
    if dist.total_posts != pop.n_posts:
        raise ValidationError("distribution was not built for this population")
    if spec.strategy == UNIFORM and S < MIN_PER_BIN * n_bins:
        raise ValidationError(
            f"uniform sampling needs S >= {MIN_PER_BIN} x {n_bins} bins = "
            f"{MIN_PER_BIN * n_bins}, got {S}"
        )

    if spec.strategy == PROPORTIONAL:
        quotas = proportional_quotas(dist.masses, S)
    else:
        quotas = uniform_quotas(n_bins, S)

    post_by_index = pop.posts
    reuse_ids: set[str] = set()
    if spec.reuse_pool:
        reuse_ids = {pid for pid, _ in spec.reuse_pool}
        known = {p.post_id for p in pop.posts}
        stray = reuse_ids - known
        if stray:
            raise ValidationError(
                f"reuse pool contains {len(stray)} posts outside the population "
                f"(e.g. {sorted(stray)[:3]})"
            )

    entries: list[SampleEntry] = []
    achieved: list[int] = []
    for bin_index, (b, quota) in enumerate(zip(dist.bins, quotas)):
        if quota > b.count:
            raise BinExhaustedError(bin_index, quota, b.count)
        ids_in_bin = sorted(post_by_index[i].post_id for i in b.post_indices)
        id_to_member = {
            post_by_index[i].post_id: post_by_index[i].member_id
            for i in b.post_indices
        }
        reused_here = [pid for pid in ids_in_bin if pid in reuse_ids][:quota]
        taken = set(reused_here)
        remaining_quota = quota - len(reused_here)
        fresh: list[str] = []
        if remaining_quota > 0:
            candidates = [pid for pid in ids_in_bin if pid not in taken]
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=spec.seed, spawn_key=(bin_index,))
            )
            picked = rng.choice(len(candidates), size=remaining_quota, replace=False)
            fresh = [candidates[k] for k in sorted(picked.tolist())]
        for pid in reused_here:
            entries.append(SampleEntry(pid, id_to_member[pid], bin_index, True))
        for pid in fresh:
            entries.append(SampleEntry(pid, id_to_member[pid], bin_index, False))
        achieved.append(quota)

    return StratifiedSample(
        entries=tuple(entries),
        spec=spec,
        achieved_distribution=tuple(q / S for q in achieved),
        quotas=tuple(quotas),
    )


def read_sample_csv(path) -> list[SampleEntry]:
    """Parse a sample CSV (post_id,member_id,bin,reused) back into entries."""
    entries: list[SampleEntry] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "post_id,member_id,bin,reused":
            raise DataError(f"{path}: unexpected sample CSV header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            post_id, member_id, bin_index, reused = line.split(",")
            entries.append(
                SampleEntry(post_id, member_id, int(bin_index), bool(int(reused)))
            )
    return entries


def proportion_std_error(p: float, n: int) -> float:
    """Standard error of a sample proportion: sqrt(p(1-p)/n)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError("proportion must lie in [0, 1]")
    if n < 1:
        raise ValidationError("n must be >= 1")
    return math.sqrt(p * (1.0 - p) / n)
