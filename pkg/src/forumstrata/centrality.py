"""Per-member centrality metrics over a population graph.

All metrics score *member* nodes of the bipartite member-thread interaction
graph:

  post degree    value(i) = sum_j W[i, j] * A[i, j]   (total posts)
  thread degree  value(i) = sum_j A[i, j]             (distinct threads)
  eigenvector    principal-eigenvector component of the symmetric bipartite
                 adjacency, restricted to member nodes
  betweenness    exact fraction of all-pairs shortest paths through a node,
                 counted over ordered pairs; only feasible on small graphs

Each metric is a pure function of an immutable PopulationGraph; results are
plain values, safe to share across threads.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
import numpy as np

from .errors import DataError, InfeasibleError, ValidationError
from .graph import PopulationGraph

POST_DEGREE = "post_degree"
THREAD_DEGREE = "thread_degree"
EIGENVECTOR = "eigenvector"
BETWEENNESS = "betweenness"

METRICS = (POST_DEGREE, THREAD_DEGREE, EIGENVECTOR, BETWEENNESS)

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100
DEFAULT_NODE_LIMIT = 5_000


@dataclass(frozen=True)
class CentralityVector:
    """Per-member metric values, aligned with the population member order."""

    metric: str
    member_ids: tuple[str, ...]
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.member_ids, self.values.tolist()))

    def value_of(self, member_id: str) -> float:
        try:
            idx = self.member_ids.index(member_id)
        except ValueError:
            raise KeyError(member_id) from None
        return float(self.values[idx])

    def __len__(self) -> int:
        return len(self.member_ids)


def _require_population(pop: PopulationGraph) -> None:
    if pop.n_members == 0 or pop.n_posts == 0:
        raise DataError("empty population")


def post_degree(pop: PopulationGraph) -> CentralityVector:
    """Total post count per member: one pass over the weight matrix."""
    _require_population(pop)
    values = np.asarray(pop.W.sum(axis=1)).ravel().astype(np.float64)
    return CentralityVector(POST_DEGREE, pop.member_ids, values)


def thread_degree(pop: PopulationGraph) -> CentralityVector:
    """Distinct-thread count per member: one pass over the adjacency."""
    _require_population(pop)
    values = np.asarray(pop.A.sum(axis=1)).ravel().astype(np.float64)
    return CentralityVector(THREAD_DEGREE, pop.member_ids, values)


def eigenvector(
    pop: PopulationGraph,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    weighted: bool = False,
) -> CentralityVector:
    """Principal-eigenvector centrality of the bipartite interaction graph.

    Power iteration runs on (I + B) where B is the symmetric adjacency over
    the combined member+thread node set; the identity shift is the standard
    remedy for the +/-lambda_max oscillation of bipartite spectra and leaves
    the principal eigenvector unchanged.  The iterate is L2-normalized over
    the full bipartite vector each step, starting from all ones; convergence
    is successive-iterate L2 distance < tol.  lambda_max is estimated by the
    Rayleigh quotient of B at the final iterate.

    Non-convergence within max_iter is not an error: the result is returned
    with meta["converged"] = False and the final residual, and the caller
    decides.  On a disconnected graph the iteration converges to the
    dominant component's eigenvector; members of other components can
    legitimately receive values near zero.
    """
    _require_population(pop)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")

    M = (pop.W if weighted else pop.A).astype(np.float64)
    n_m, n_t = M.shape
    xm = np.ones(n_m)
    xt = np.ones(n_t)
    norm = np.sqrt(n_m + n_t)
    xm /= norm
    xt /= norm

    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_xm = xm + M @ xt
        new_xt = xt + M.T @ xm
        norm = np.sqrt(new_xm @ new_xm + new_xt @ new_xt)
        if norm == 0.0:
            raise DataError("interaction graph has no edges")
        new_xm /= norm
        new_xt /= norm
        diff = np.sqrt(
            np.sum((new_xm - xm) ** 2) + np.sum((new_xt - xt) ** 2)
        )
        xm, xt = new_xm, new_xt
        residual = diff
        if diff < tol:
            break

    # Rayleigh quotient of the (unshifted) adjacency at the unit iterate.
    bm = M @ xt
    bt = M.T @ xm
    lambda_max = float(xm @ bm + xt @ bt)

    meta = {
        "iterations": iterations,
        "residual": float(residual),
        "lambda_max_estimate": lambda_max,
        "converged": bool(residual < tol),
        "weighted": weighted,
    }
    return CentralityVector(EIGENVECTOR, pop.member_ids, xm.copy(), meta)


def _bipartite_adjacency_lists(pop: PopulationGraph) -> list[list[int]]:
    """Adjacency lists over members (0..n_m-1) then threads (n_m..n_m+n_t-1)."""
    n_m = pop.n_members
    coo = pop.A.tocoo()
    adj: list[list[int]] = [[] for _ in range(n_m + pop.n_threads)]
    for i, j in zip(coo.row, coo.col):
        adj[i].append(n_m + j)
        adj[n_m + j].append(i)
    for lst in adj:
        lst.sort()
    return adj


def betweenness_exact(
    pop: PopulationGraph, node_limit: int = DEFAULT_NODE_LIMIT
) -> CentralityVector:
    """Exact betweenness over ordered node pairs of the bipartite graph.

    C_B(v) = sum over ordered pairs (s, t), s != t != v, of the fraction of
    shortest s-t paths that pass through v.  Computed with the Brandes
    single-source accumulation, which is exact; the per-source loop makes
    this O(n * m) and it is refused outright above node_limit because at
    forum scale (millions of nodes, unbounded diameter) the computation is
    not feasible and pivot-based approximations carry unbounded error.
    """
    _require_population(pop)
    n = pop.n_members + pop.n_threads
    if n > node_limit:
        raise InfeasibleError(
            f"graph has {n} nodes, exceeding node_limit={node_limit}; exact "
            "betweenness is infeasible at this scale and approximations are "
            "not supported"
        )
    adj = _bipartite_adjacency_lists(pop)
    centrality = np.zeros(n)

    for s in range(n):
        # single-source shortest paths (unweighted) with path counts
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        preds: list[list[int]] = [[] for _ in range(n)]
        dist[s] = 0
        sigma[s] = 1.0
        order: list[int] = []
        queue: deque[int] = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        # dependency accumulation (reverse BFS order)
        delta = np.zeros(n)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                centrality[w] += delta[w]

    # Each unordered {s, t} is visited from both endpoints, which is exactly
    # the ordered-pair count: no halving.
    values = centrality[: pop.n_members].copy()
    return CentralityVector(
        BETWEENNESS, pop.member_ids, values, {"node_limit": node_limit, "nodes": n}
    )


def compute(pop: PopulationGraph, metric: str, **kwargs) -> CentralityVector:
    """Dispatch a metric by name."""
    if metric == POST_DEGREE:
        return post_degree(pop)
    if metric == THREAD_DEGREE:
        return thread_degree(pop)
    if metric == EIGENVECTOR:
        return eigenvector(pop, **kwargs)
    if metric == BETWEENNESS:
        return betweenness_exact(pop, **kwargs)
    raise ValidationError(f"unknown metric: {metric!r} (expected one of {METRICS})")
