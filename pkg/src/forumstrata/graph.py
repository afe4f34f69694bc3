"""Typed forum graph: ingestion, interaction edges, and population projection.

A forum corpus maps onto four node kinds (forum, board, thread, member) and
two member-thread edge layers: one *post* edge per comment, and one derived
*interact* edge per (member, thread) pair whose weight counts that member's
posts in that thread.  Populations are sub-graphs selected by a rule
(post types, boards, date cutoff, member exclusions) and carry the sparse
member x thread adjacency A and weight matrix W used by the centrality and
sampling layers.

Graphs are immutable after construction: exclusions and projections return
new values, so concurrent readers never observe mutation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping, Optional

import numpy as np
from scipy import sparse

from .errors import (
    DataError,
    EmptyPopulationError,
    IngestError,
    NotFoundError,
)

SCHEMA_VERSION = 1

#: post_type values recognised as-is; anything else is retagged "other".
KNOWN_POST_TYPES = frozenset({"offer", "request", "exchange", "tutorial"})
OTHER_POST_TYPE = "other"

REQUIRED_FIELDS = (
    "forum",
    "board",
    "thread_id",
    "thread_title",
    "member_id",
    "post_id",
    "content",
    "post_type",
    "timestamp",
)


def normalize_post_type(raw: str) -> str:
    t = raw.strip().lower()
    return t if t in KNOWN_POST_TYPES else OTHER_POST_TYPE


def parse_timestamp(raw: str) -> datetime:
    """Parse an RFC 3339 timestamp; naive values are taken as UTC."""
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


@dataclass(frozen=True, slots=True)
class PostEdge:
    member_id: str
    thread_id: str
    post_id: str
    content: str
    post_type: str
    timestamp: datetime


@dataclass(frozen=True)
class ForumGraph:
    """Immutable typed graph of a forum corpus.

    Node identity is the source id string (members, threads) or the label
    path (forums, boards: ``forum/board``); display labels may collide and
    are kept separately.
    """

    forums: Mapping[str, str]            # forum_id -> label
    boards: Mapping[str, str]            # board_id -> label
    threads: Mapping[str, str]           # thread_id -> title
    members: Mapping[str, str]           # member_id -> label
    posts: tuple[PostEdge, ...]
    board_of_thread: Mapping[str, str]   # thread_id -> board_id
    forum_of_board: Mapping[str, str]    # board_id -> forum_id
    interact: Mapping[tuple[str, str], int] = field(default_factory=dict)

    # -- node/edge accounting -------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return (
            len(self.forums) + len(self.boards) + len(self.threads) + len(self.members)
        )

    @property
    def interact_edges(self) -> list[tuple[str, str, int]]:
        return [(m, t, w) for (m, t), w in self.interact.items()]

    def stats(self) -> dict:
        return {
            "forums": len(self.forums),
            "boards": len(self.boards),
            "threads": len(self.threads),
            "members": len(self.members),
            "post_edges": len(self.posts),
            "interact_edges": len(self.interact),
        }

    def member_post_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.posts:
            counts[p.member_id] = counts.get(p.member_id, 0) + 1
        return counts

    # -- persistence ----------------------------------------------------------

    def to_snapshot(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "forums": dict(self.forums),
            "boards": dict(self.boards),
            "threads": dict(self.threads),
            "members": dict(self.members),
            "board_of_thread": dict(self.board_of_thread),
            "forum_of_board": dict(self.forum_of_board),
            "posts": [
                {
                    "member_id": p.member_id,
                    "thread_id": p.thread_id,
                    "post_id": p.post_id,
                    "content": p.content,
                    "post_type": p.post_type,
                    "timestamp": p.timestamp.isoformat(),
                }
                for p in self.posts
            ],
        }

    @classmethod
    def from_snapshot(cls, data: Mapping) -> "ForumGraph":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise DataError(f"unsupported graph snapshot schema version: {version!r}")
        posts = tuple(
            PostEdge(
                member_id=p["member_id"],
                thread_id=p["thread_id"],
                post_id=p["post_id"],
                content=p["content"],
                post_type=p["post_type"],
                timestamp=parse_timestamp(p["timestamp"]),
            )
            for p in data["posts"]
        )
        graph = cls(
            forums=dict(data["forums"]),
            boards=dict(data["boards"]),
            threads=dict(data["threads"]),
            members=dict(data["members"]),
            posts=posts,
            board_of_thread=dict(data["board_of_thread"]),
            forum_of_board=dict(data["forum_of_board"]),
        )
        return build_interact(graph)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_snapshot(), fh)

    @classmethod
    def load(cls, path) -> "ForumGraph":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_snapshot(json.load(fh))


def board_id_for(forum: str, board_label: str) -> str:
    return f"{forum}/{board_label}"


def ingest(records: Iterable[Mapping]) -> ForumGraph:
    """Build a ForumGraph from an iterable of post records.

    Records must carry the fields in REQUIRED_FIELDS.  Duplicate post_id
    values and malformed records raise IngestError with the 1-based record
    number; node identity follows the source ids, deduplicated within their
    parent scope.
    """
    return _build(enumerate(records, start=1))


def _build(numbered: Iterable[tuple[int, Mapping]]) -> ForumGraph:
    forums: dict[str, str] = {}
    boards: dict[str, str] = {}
    threads: dict[str, str] = {}
    members: dict[str, str] = {}
    board_of_thread: dict[str, str] = {}
    forum_of_board: dict[str, str] = {}
    posts: list[PostEdge] = []
    seen_post_ids: set[str] = set()

    for lineno, rec in numbered:
        if not isinstance(rec, Mapping):
            raise IngestError(lineno, "record is not an object")
        missing = [k for k in REQUIRED_FIELDS if k not in rec]
        if missing:
            raise IngestError(lineno, f"missing fields: {', '.join(missing)}")
        try:
            forum = str(rec["forum"])
            board_label = str(rec["board"])
            thread_id = str(rec["thread_id"])
            thread_title = str(rec["thread_title"])
            member_id = str(rec["member_id"])
            post_id = str(rec["post_id"])
            content = str(rec["content"])
            post_type = normalize_post_type(str(rec["post_type"]))
            timestamp = parse_timestamp(str(rec["timestamp"]))
        except (TypeError, ValueError) as exc:
            raise IngestError(lineno, f"malformed record: {exc}") from exc

        if not forum or not thread_id or not member_id or not post_id:
            raise IngestError(lineno, "empty identifier field")
        if post_id in seen_post_ids:
            raise IngestError(lineno, f"duplicate post_id: {post_id}")
        seen_post_ids.add(post_id)

        board_id = board_id_for(forum, board_label)
        forums.setdefault(forum, forum)
        boards.setdefault(board_id, board_label)
        forum_of_board.setdefault(board_id, forum)
        if thread_id in board_of_thread:
            if board_of_thread[thread_id] != board_id:
                raise IngestError(
                    lineno,
                    f"thread {thread_id} already belongs to board "
                    f"{board_of_thread[thread_id]}, cannot reassign to {board_id}",
                )
        else:
            board_of_thread[thread_id] = board_id
            threads[thread_id] = thread_title
        members.setdefault(member_id, member_id)
        posts.append(
            PostEdge(member_id, thread_id, post_id, content, post_type, timestamp)
        )

    graph = ForumGraph(
        forums=forums,
        boards=boards,
        threads=threads,
        members=members,
        posts=tuple(posts),
        board_of_thread=board_of_thread,
        forum_of_board=forum_of_board,
    )
    return build_interact(graph)


def ingest_jsonl(lines: Iterable[str]) -> ForumGraph:
    """Ingest a JSON-lines corpus (one post object per line).

    Blank lines are skipped; errors carry the 1-based file line number.
    """

    def numbered() -> Iterator[tuple[int, Mapping]]:
        for lineno, raw in enumerate(lines, start=1):
            text = raw.strip()
            if not text:
                continue
            try:
                yield lineno, json.loads(text)
            except json.JSONDecodeError as exc:
                raise IngestError(lineno, f"invalid JSON: {exc}") from exc

    return _build(numbered())


def ingest_jsonl_file(path) -> ForumGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest_jsonl(fh)


def build_interact(graph: ForumGraph) -> ForumGraph:
    """Derive interact edges as per-(member, thread) post counts.

    Pure and idempotent: weight(m, t) = number of post edges between m and t,
    and an interact edge exists exactly where that count is positive.
    """
    weights: dict[tuple[str, str], int] = {}
    for p in graph.posts:
        key = (p.member_id, p.thread_id)
        weights[key] = weights.get(key, 0) + 1
    return ForumGraph(
        forums=graph.forums,
        boards=graph.boards,
        threads=graph.threads,
        members=graph.members,
        posts=graph.posts,
        board_of_thread=graph.board_of_thread,
        forum_of_board=graph.forum_of_board,
        interact=weights,
    )


def exclude_member(graph: ForumGraph, member_id: str) -> ForumGraph:
    """Return a new graph without the member and all its incident edges."""
    if member_id not in graph.members:
        raise NotFoundError(f"unknown member: {member_id}")
    members = {m: lab for m, lab in graph.members.items() if m != member_id}
    posts = tuple(p for p in graph.posts if p.member_id != member_id)
    pruned = ForumGraph(
        forums=graph.forums,
        boards=graph.boards,
        threads=graph.threads,
        members=members,
        posts=posts,
        board_of_thread=graph.board_of_thread,
        forum_of_board=graph.forum_of_board,
    )
    return build_interact(pruned)


@dataclass(frozen=True)
class SelectionRule:
    """Filter deciding which posts form a population.

    An empty post_type_filter admits all types; a non-empty one admits only
    the named known types (posts retagged "other" never pass a non-empty
    filter).  The cutoff excludes posts strictly after it.  board_filter
    entries match either the board id (``forum/board``) or the bare label.
    """

    post_type_filter: frozenset[str] = frozenset()
    board_filter: Optional[frozenset[str]] = None
    cutoff: Optional[datetime] = None
    excluded_members: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(
            self,
            "post_type_filter",
            frozenset(t.strip().lower() for t in self.post_type_filter),
        )
        if self.board_filter is not None:
            object.__setattr__(self, "board_filter", frozenset(self.board_filter))
        object.__setattr__(
            self, "excluded_members", frozenset(self.excluded_members)
        )
        if self.cutoff is not None and self.cutoff.tzinfo is None:
            object.__setattr__(
                self, "cutoff", self.cutoff.replace(tzinfo=timezone.utc)
            )

    def admits(self, post: PostEdge, board_id: str, board_label: str) -> bool:
        if post.member_id in self.excluded_members:
            return False
        if self.post_type_filter:
            if post.post_type == OTHER_POST_TYPE:
                return False
            if post.post_type not in self.post_type_filter:
                return False
        if self.board_filter is not None:
            if board_id not in self.board_filter and board_label not in self.board_filter:
                return False
        if self.cutoff is not None and post.timestamp > self.cutoff:
            return False
        return True

    def to_json(self) -> dict:
        return {
            "post_type_filter": sorted(self.post_type_filter),
            "board_filter": sorted(self.board_filter) if self.board_filter is not None else None,
            "cutoff": self.cutoff.isoformat() if self.cutoff else None,
            "excluded_members": sorted(self.excluded_members),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SelectionRule":
        return cls(
            post_type_filter=frozenset(data.get("post_type_filter") or ()),
            board_filter=(
                frozenset(data["board_filter"])
                if data.get("board_filter") is not None
                else None
            ),
            cutoff=(
                parse_timestamp(data["cutoff"]) if data.get("cutoff") else None
            ),
            excluded_members=frozenset(data.get("excluded_members") or ()),
        )


@dataclass(frozen=True)
class PopulationGraph:
    """Projected sub-graph plus the rule that produced it.

    member_index/thread_index are dense reindexings in order of first
    appearance in the retained post stream, so identical inputs produce
    identical matrices.  A is the 0/1 interact adjacency; W holds the
    per-pair post counts (W[i, j] >= 1 exactly where A[i, j] = 1).
    """

    base: ForumGraph
    rule: SelectionRule
    member_ids: tuple[str, ...]
    thread_ids: tuple[str, ...]
    member_index: Mapping[str, int]
    thread_index: Mapping[str, int]
    A: sparse.csr_matrix
    W: sparse.csr_matrix
    posts: tuple[PostEdge, ...]

    @property
    def n_members(self) -> int:
        return len(self.member_ids)

    @property
    def n_threads(self) -> int:
        return len(self.thread_ids)

    @property
    def n_posts(self) -> int:
        return len(self.posts)

    def post_ids(self) -> list[str]:
        return [p.post_id for p in self.posts]

    def as_graph(self) -> ForumGraph:
        """Materialize the retained posts as a standalone ForumGraph."""
        threads = {t: self.base.threads[t] for t in self.thread_ids}
        members = {m: self.base.members[m] for m in self.member_ids}
        board_of_thread = {
            t: self.base.board_of_thread[t] for t in self.thread_ids
        }
        board_ids = set(board_of_thread.values())
        boards = {b: self.base.boards[b] for b in board_ids}
        forum_of_board = {b: self.base.forum_of_board[b] for b in board_ids}
        forums = {f: self.base.forums[f] for f in set(forum_of_board.values())}
        graph = ForumGraph(
            forums=forums,
            boards=boards,
            threads=threads,
            members=members,
            posts=self.posts,
            board_of_thread=board_of_thread,
            forum_of_board=forum_of_board,
        )
        return build_interact(graph)


def save_population(pop: PopulationGraph, path) -> None:
    """Persist a population as its projected graph plus the rule.

    Loading re-projects the stored graph with the stored rule; projection is
    idempotent, so A and W come back identical.
    """
    payload = {
        "schema_version": SCHEMA_VERSION,
        "rule": pop.rule.to_json(),
        "graph": pop.as_graph().to_snapshot(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_population(path) -> PopulationGraph:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise DataError("unsupported population snapshot schema version")
    graph = ForumGraph.from_snapshot(payload["graph"])
    rule = SelectionRule.from_json(payload["rule"])
    return project(graph, rule)


def project(graph: ForumGraph, rule: SelectionRule) -> PopulationGraph:
    """Project the population selected by ``rule`` out of ``graph``.

    Members and threads with no retained post are dropped; A and W are
    rebuilt from the retained posts only.  Raises EmptyPopulationError when
    nothing passes the rule.
    """
    retained: list[PostEdge] = []
    for p in graph.posts:
        board_id = graph.board_of_thread[p.thread_id]
        board_label = graph.boards[board_id]
        if rule.admits(p, board_id, board_label):
            retained.append(p)
    if not retained:
        raise EmptyPopulationError("selection rule matched zero posts")

    member_index: dict[str, int] = {}
    thread_index: dict[str, int] = {}
    rows: list[int] = []
    cols: list[int] = []
    for p in retained:
        if p.member_id not in member_index:
            member_index[p.member_id] = len(member_index)
        if p.thread_id not in thread_index:
            thread_index[p.thread_id] = len(thread_index)
        rows.append(member_index[p.member_id])
        cols.append(thread_index[p.thread_id])

    n_m, n_t = len(member_index), len(thread_index)
    data = np.ones(len(retained), dtype=np.int64)
    W = sparse.coo_matrix((data, (rows, cols)), shape=(n_m, n_t)).tocsr()
    W.sum_duplicates()
    A = W.copy()
    A.data = np.ones_like(A.data)

    return PopulationGraph(
        base=graph,
        rule=rule,
        member_ids=tuple(member_index),
        thread_ids=tuple(thread_index),
        member_index=member_index,
        thread_index=thread_index,
        A=A,
        W=W,
        posts=tuple(retained),
    )
