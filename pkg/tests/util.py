"""Shared builders and independent oracles for the test suite."""

from __future__ import annotations

from collections import Counter, deque

import numpy as np

from forumstrata.graph import SelectionRule, ingest, project


def make_record(
    post_id,
    member_id="m1",
    thread_id="t1",
    forum="f",
    board="b",
    post_type="offer",
    content="hello world",
    minute=0,
    thread_title="a thread",
):
    return {
        "forum": forum,
        "board": board,
        "thread_id": thread_id,
        "thread_title": thread_title,
        "member_id": member_id,
        "post_id": post_id,
        "content": content,
        "post_type": post_type,
        "timestamp": f"2018-01-01T00:{minute // 60:02d}:{minute % 60:02d}+00:00",
    }


def random_records(
    seed, n_members=30, n_threads=15, n_posts=200, n_boards=2, connected=False
):
    """Random post records; optionally patched into one connected component."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_posts):
        m = int(rng.integers(n_members))
        t = int(rng.integers(n_threads))
        records.append(
            make_record(
                post_id=f"p{i:05d}",
                member_id=f"m{m:03d}",
                thread_id=f"t{t:03d}",
                board=f"b{t % n_boards}",
                content=f"tok{int(rng.integers(50))} tok{int(rng.integers(50))}",
                post_type=["offer", "request", "exchange", "tutorial"][
                    int(rng.integers(4))
                ],
                minute=i,
            )
        )
    if connected:
        records = _connect(records, n_posts)
    return records


def _connect(records, next_post_num):
    """Add bridging posts so the member-thread graph has one component."""
    members = sorted({r["member_id"] for r in records})
    adj: dict[str, set[str]] = {}
    for r in records:
        adj.setdefault("M" + r["member_id"], set()).add("T" + r["thread_id"])
        adj.setdefault("T" + r["thread_id"], set()).add("M" + r["member_id"])
    seen = set()
    components = []
    for node in sorted(adj):
        if node in seen:
            continue
        comp = set()
        queue = deque([node])
        seen.add(node)
        while queue:
            v = queue.popleft()
            comp.add(v)
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        components.append(comp)
    if len(components) <= 1:
        return records
    main_thread = sorted(
        t for t in components[0] if t.startswith("T")
    )[0][1:]
    thread_board = {r["thread_id"]: r["board"] for r in records}
    extra = []
    for comp in components[1:]:
        member = sorted(m for m in comp if m.startswith("M"))[0][1:]
        extra.append(
            make_record(
                post_id=f"p{next_post_num + len(extra):05d}",
                member_id=member,
                thread_id=main_thread,
                board=thread_board[main_thread],
                minute=600 + len(extra),
            )
        )
    return records + extra


def random_population(seed, **kwargs):
    records = random_records(seed, **kwargs)
    graph = ingest(records)
    return project(graph, SelectionRule()), records


# -- independent oracles --------------------------------------------------------


def brute_force_post_counts(records):
    return Counter(r["member_id"] for r in records)


def brute_force_thread_counts(records):
    threads = {}
    for r in records:
        threads.setdefault(r["member_id"], set()).add(r["thread_id"])
    return {m: len(ts) for m, ts in threads.items()}


def dense_principal_eigenvector(pop):
    """Dense symmetric eigensolver over the full bipartite adjacency."""
    n_m, n_t = pop.A.shape
    B = np.zeros((n_m + n_t, n_m + n_t))
    Ad = pop.A.toarray()
    B[:n_m, n_m:] = Ad
    B[n_m:, :n_m] = Ad.T
    vals, vecs = np.linalg.eigh(B)
    v = vecs[:, -1]
    if v.sum() < 0:
        v = -v
    return v, float(vals[-1])


def full_bipartite_vector(pop, cv):
    """Member components plus the thread half implied by the eigenpair."""
    lam = cv.meta["lambda_max_estimate"]
    thread_part = np.asarray(pop.A.T @ cv.values) / lam
    full = np.concatenate([cv.values, thread_part])
    return full / np.linalg.norm(full)


def bipartite_adjacency(pop):
    n_m = pop.A.shape[0]
    adj = {i: set() for i in range(n_m + pop.A.shape[1])}
    coo = pop.A.tocoo()
    for i, j in zip(coo.row, coo.col):
        adj[i].add(n_m + j)
        adj[n_m + j].add(i)
    return adj


def enumerate_betweenness(adj, n):
    """Betweenness by explicit shortest-path enumeration (ordered pairs)."""
    centrality = np.zeros(n)
    for s in range(n):
        dist = {s: 0}
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in adj[v]:
                if w not in dist:
                    dist[w] = dist[v] + 1
                    queue.append(w)
        for t in range(n):
            if t == s or t not in dist:
                continue
            paths = []
            stack = [(t, [t])]
            while stack:
                v, path = stack.pop()
                if v == s:
                    paths.append(path)
                    continue
                for w in adj[v]:
                    if w in dist and dist[w] == dist[v] - 1:
                        stack.append((w, path + [w]))
            for path in paths:
                for v in path[1:-1]:
                    centrality[v] += 1.0 / len(paths)
    return centrality
