"""Classifier input pipeline: documents, preprocessing, tf-idf, oversampling.

A classifier document is the post content followed by the thread title and
the board title, space-joined in that fixed order.  Preprocessing lowercases,
tokenizes on word boundaries, drops stop-words (shipped English list, or a
caller-supplied file) and suffix-stems each token.

Vectorization is tf-idf with the smoothed formula

    idf(t) = ln((1 + N) / (1 + df(t))) + 1

over the fitted corpus only; rows are L2-normalized.  Transforming unseen
documents ignores out-of-vocabulary tokens, so test folds can never leak
into the vocabulary.  Class imbalance is corrected by synthetic minority
oversampling in the vectorized space: new points interpolate between a
minority row and one of its k nearest same-class neighbours.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist

from .errors import DataError, ValidationError
from .graph import PopulationGraph
from .stemmer import stem

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

_DEFAULT_STOPWORDS: frozenset[str] | None = None


def load_stopwords(path=None) -> frozenset[str]:
    """Stop-word set from a one-token-per-line file (shipped list by default)."""
    global _DEFAULT_STOPWORDS
    if path is None:
        if _DEFAULT_STOPWORDS is None:
            text = (
                resources.files("forumstrata.data")
                .joinpath("stopwords_en.txt")
                .read_text(encoding="utf-8")
            )
            _DEFAULT_STOPWORDS = frozenset(
                w.strip() for w in text.splitlines() if w.strip()
            )
        return _DEFAULT_STOPWORDS
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(w.strip() for w in fh if w.strip())


def preprocess(
    raw: str,
    stopwords: Optional[frozenset[str]] = None,
    do_stem: bool = True,
) -> list[str]:
    """lowercase -> tokenize -> drop stop-words -> stem.  Empty output is fine."""
    if stopwords is None:
        stopwords = load_stopwords()
    tokens = _TOKEN_RE.findall(raw.lower())
    out = []
    for tok in tokens:
        if tok in stopwords:
            continue
        out.append(stem(tok) if do_stem else tok)
    return out


def compose_text(content: str, thread_title: str, board_title: str) -> str:
    return " ".join((content, thread_title, board_title))


@dataclass(frozen=True)
class Document:
    post_id: str
    text: str
    label: Optional[str] = None


def documents_for_population(
    pop: PopulationGraph, labels: Optional[Mapping[str, str]] = None
) -> list[Document]:
    """Compose one document per population post (content, thread and board titles)."""
    docs = []
    for p in pop.posts:
        board_id = pop.base.board_of_thread[p.thread_id]
        text = compose_text(
            p.content, pop.base.threads[p.thread_id], pop.base.boards[board_id]
        )
        label = labels.get(p.post_id) if labels is not None else None
        docs.append(Document(p.post_id, text, label))
    return docs


def documents_from_graph(
    graph,
    post_ids: Optional[Sequence[str]] = None,
    labels: Optional[Mapping[str, str]] = None,
) -> list[Document]:
    """Compose documents for specific graph posts (all posts by default).

    When post_ids is given, output order follows it and unknown ids raise.
    """
    by_id = {p.post_id: p for p in graph.posts}
    if post_ids is None:
        selected = list(graph.posts)
    else:
        missing = [pid for pid in post_ids if pid not in by_id]
        if missing:
            raise DataError(
                f"{len(missing)} post ids not present in the graph "
                f"(e.g. {missing[:3]})"
            )
        selected = [by_id[pid] for pid in post_ids]
    docs = []
    for p in selected:
        board_id = graph.board_of_thread[p.thread_id]
        text = compose_text(
            p.content, graph.threads[p.thread_id], graph.boards[board_id]
        )
        label = labels.get(p.post_id) if labels is not None else None
        docs.append(Document(p.post_id, text, label))
    return docs


@dataclass(frozen=True)
class VectorizerConfig:
    min_df: int = 2
    max_features: Optional[int] = None


@dataclass(frozen=True)
class VectorSpace:
    vocabulary: Mapping[str, int]     # token -> dense column index
    idf: np.ndarray
    config: VectorizerConfig
    provenance: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.vocabulary)

    def vocab_hash(self) -> str:
        payload = json.dumps(
            {
                "vocabulary": dict(sorted(self.vocabulary.items())),
                "idf": [repr(x) for x in self.idf.tolist()],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()

    def to_json(self) -> dict:
        return {
            "vocabulary": dict(self.vocabulary),
            "idf": self.idf.tolist(),
            "config": {
                "min_df": self.config.min_df,
                "max_features": self.config.max_features,
            },
            "provenance": dict(self.provenance),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "VectorSpace":
        return cls(
            vocabulary=dict(data["vocabulary"]),
            idf=np.asarray(data["idf"], dtype=np.float64),
            config=VectorizerConfig(
                min_df=data["config"]["min_df"],
                max_features=data["config"].get("max_features"),
            ),
            provenance=dict(data.get("provenance", {})),
        )


@dataclass(frozen=True)
class FeatureMatrix:
    X: sparse.csr_matrix
    labels: Optional[tuple[str, ...]] = None

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]


def _doc_digest(docs: Sequence[Document]) -> str:
    h = hashlib.sha256()
    for d in docs:
        h.update(d.post_id.encode())
        h.update(b"\x00")
    return h.hexdigest()


def fit(
    docs: Sequence[Document],
    config: VectorizerConfig = VectorizerConfig(),
    stopwords: Optional[frozenset[str]] = None,
) -> VectorSpace:
    """Learn vocabulary and idf from the given documents only."""
    if not docs:
        raise DataError("cannot fit a vector space on zero documents")
    token_lists = [preprocess(d.text, stopwords) for d in docs]
    df: dict[str, int] = {}
    for toks in token_lists:
        for tok in set(toks):
            df[tok] = df.get(tok, 0) + 1
    if not df:
        raise DataError("all documents are empty after preprocessing")

    kept = [t for t, c in df.items() if c >= config.min_df]
    if config.max_features is not None and len(kept) > config.max_features:
        kept.sort(key=lambda t: (-df[t], t))
        kept = kept[: config.max_features]
    kept.sort()
    if not kept:
        raise DataError(
            f"no token reaches min_df={config.min_df}; vocabulary is empty"
        )
    vocabulary = {t: i for i, t in enumerate(kept)}

    n = len(docs)
    idf = np.empty(len(kept), dtype=np.float64)
    for t, i in vocabulary.items():
        idf[i] = np.log((1.0 + n) / (1.0 + df[t])) + 1.0

    return VectorSpace(
        vocabulary=vocabulary,
        idf=idf,
        config=config,
        provenance={"n_docs": n, "doc_digest": _doc_digest(docs)},
    )


def transform(
    space: VectorSpace,
    docs: Sequence[Document],
    stopwords: Optional[frozenset[str]] = None,
) -> FeatureMatrix:
    """tf-idf rows aligned to the fitted vocabulary; OOV tokens contribute 0."""
    vocab = space.vocabulary
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for d in docs:
        counts: dict[int, int] = {}
        for tok in preprocess(d.text, stopwords):
            col = vocab.get(tok)
            if col is not None:
                counts[col] = counts.get(col, 0) + 1
        for col in sorted(counts):
            indices.append(col)
            data.append(counts[col] * space.idf[col])
        indptr.append(len(indices))
    X = sparse.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr)),
        shape=(len(docs), space.n_features),
    )
    _l2_normalize_inplace(X)
    labels = None
    if docs and all(d.label is not None for d in docs):
        labels = tuple(d.label for d in docs)
    return FeatureMatrix(X=X, labels=labels)


def fit_transform(
    docs: Sequence[Document],
    config: VectorizerConfig = VectorizerConfig(),
    stopwords: Optional[frozenset[str]] = None,
) -> tuple[VectorSpace, FeatureMatrix]:
    space = fit(docs, config, stopwords)
    return space, transform(space, docs, stopwords)


def _l2_normalize_inplace(X: sparse.csr_matrix) -> None:
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    for r in range(X.shape[0]):
        if norms[r] > 0:
            X.data[X.indptr[r] : X.indptr[r + 1]] /= norms[r]


def oversample(
    matrix: FeatureMatrix, k: int = 5, seed: int = 0
) -> tuple[FeatureMatrix, list[tuple[int, int, float]]]:
    """Balance classes by interpolated synthetic minority rows.

    Every class below the majority count receives synthetic points
    x_new = x + u * (x_nn - x) with u ~ Uniform(0, 1) and x_nn one of x's k
    nearest same-class neighbours (Euclidean), until all classes match the
    majority.  Original rows are kept untouched at the front of the output.

    Returns the balanced matrix and a provenance log of
    (parent_row, neighbour_row, u) triples, indices into the INPUT matrix,
    one per synthetic row in output order.
    """
    if matrix.labels is None:
        raise ValidationError("oversample requires a labeled matrix")
    if k < 1:
        raise ValidationError("k must be >= 1")
    labels = np.asarray(matrix.labels)
    classes, counts = np.unique(labels, return_counts=True)
    majority = int(counts.max())

    rng = np.random.default_rng(seed)
    synth_rows: list[np.ndarray] = []
    synth_labels: list[str] = []
    log: list[tuple[int, int, float]] = []

    for cls in classes:
        rows = np.flatnonzero(labels == cls)
        need = majority - rows.size
        if need == 0:
            continue
        if rows.size < 2:
            raise DataError(
                f"class {cls!r} has a single sample; cannot synthesize neighbours"
            )
        k_eff = min(k, rows.size - 1)
        block = matrix.X[rows].toarray()
        dists = cdist(block, block)
        np.fill_diagonal(dists, np.inf)
        # k nearest same-class neighbours per row, stable under ties
        neighbour_idx = np.argsort(dists, axis=1, kind="stable")[:, :k_eff]
        for _ in range(need):
            p = int(rng.integers(rows.size))
            nn = int(neighbour_idx[p, int(rng.integers(k_eff))])
            u = float(rng.random())
            synth_rows.append(block[p] + u * (block[nn] - block[p]))
            synth_labels.append(str(cls))
            log.append((int(rows[p]), int(rows[nn]), u))

    if not synth_rows:
        return matrix, []

    X_new = sparse.vstack(
        [matrix.X, sparse.csr_matrix(np.vstack(synth_rows))], format="csr"
    )
    labels_new = tuple(matrix.labels) + tuple(synth_labels)
    return FeatureMatrix(X=X_new, labels=labels_new), log
