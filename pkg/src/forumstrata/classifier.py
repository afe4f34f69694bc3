"""One-vs-rest linear text classifier trained by seeded SGD.

Each class gets a binary hinge- or logistic-loss problem against the rest,
optimized by stochastic gradient descent over the tf-idf rows with L2
regularization and a 1/t-decayed learning rate:

    lr_t = lr0 / (1 + t / n)      (t = update counter, n = training rows)

A fixed seed makes training bit-identical: per-class generators are derived
from (seed, class_index) and epochs shuffle with them.  Prediction is the
argmax of the affine class scores, ties resolved to the lowest class index.

Repeated stratified holdout re-fits the entire pipeline (vocabulary, idf,
oversampling) on each seed's training fold only; the held-out fold never
touches any fitted state, which is asserted through the vector-space
provenance tag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from . import textpipe
from .errors import DataError, ValidationError
from .evaluation import EvalReport, precision_recall
from .textpipe import (
    Document,
    FeatureMatrix,
    VectorizerConfig,
    VectorSpace,
    fit,
    oversample,
    transform,
)

HINGE = "hinge"
LOGISTIC = "logistic"

MODEL_FORMAT = "forumstrata-linear-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    learning_rate: float = 0.1
    reg_lambda: float = 1e-4
    loss: str = HINGE
    seed: int = 0

    def __post_init__(self):
        if self.loss not in (HINGE, LOGISTIC):
            raise ValidationError(f"unknown loss {self.loss!r}")
        if self.epochs < 1 or self.learning_rate <= 0 or self.reg_lambda < 0:
            raise ValidationError("invalid training configuration")

    def to_json(self) -> dict:
        return {
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "reg_lambda": self.reg_lambda,
            "loss": self.loss,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, data) -> "TrainConfig":
        return cls(**data)


@dataclass(frozen=True)
class LinearModel:
    classes: tuple[str, ...]
    weights: np.ndarray          # (n_classes, n_features)
    bias: np.ndarray             # (n_classes,)
    config: TrainConfig
    vocab_hash: str = ""

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    def scores(self, X: sparse.csr_matrix) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"feature dimension mismatch: matrix has {X.shape[1]}, "
                f"model expects {self.n_features}"
            )
        return np.asarray(X @ self.weights.T) + self.bias


def loss_and_grad(
    loss: str,
    w: np.ndarray,
    b: float,
    X: sparse.csr_matrix,
    y: np.ndarray,
    reg_lambda: float,
) -> tuple[float, np.ndarray, float]:
    """Full-batch objective and analytic gradient for one binary problem.

    J(w, b) = mean_i loss(y_i, w.x_i + b) + reg_lambda/2 * ||w||^2
    with y_i in {-1, +1}.  Used by training (sample-wise) and by the
    finite-difference gradient checks.
    """
    scores = np.asarray(X @ w) + b
    margins = y * scores
    n = X.shape[0]
    if loss == HINGE:
        active = margins < 1.0
        value = float(np.mean(np.maximum(0.0, 1.0 - margins)))
        coef = np.where(active, -y, 0.0) / n
    elif loss == LOGISTIC:
        # log(1 + exp(-m)) computed stably
        value = float(np.mean(np.logaddexp(0.0, -margins)))
        coef = (-y * _sigmoid(-margins)) / n
    else:
        raise ValidationError(f"unknown loss {loss!r}")
    grad_w = np.asarray((X.T @ coef)).ravel() + reg_lambda * w
    grad_b = float(np.sum(coef))
    value += 0.5 * reg_lambda * float(w @ w)
    return value, grad_w, grad_b


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _train_binary(
    X: sparse.csr_matrix,
    y: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """SGD for one one-vs-rest problem; O(nnz) per update via lazy scaling."""
    n, d = X.shape
    w = np.zeros(d)
    scale = 1.0
    b = 0.0
    lr0 = config.learning_rate
    lam = config.reg_lambda
    logistic = config.loss == LOGISTIC
    indptr, indices, data = X.indptr, X.indices, X.data

    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            lr = lr0 / (1.0 + t / n)
            lo, hi = indptr[i], indptr[i + 1]
            cols = indices[lo:hi]
            vals = data[lo:hi]
            score = scale * float(w[cols] @ vals) + b
            margin = y[i] * score
            # L2 decay folded into the scale factor
            scale *= 1.0 - lr * lam
            if scale < 1e-9:
                w *= scale
                scale = 1.0
            if logistic:
                g = _sigmoid(np.asarray([-margin]))[0]
                step = lr * y[i] * g
                if step != 0.0:
                    w[cols] += (step / scale) * vals
                    b += step
            else:
                if margin < 1.0:
                    step = lr * y[i]
                    w[cols] += (step / scale) * vals
                    b += step
    return w * scale, b


def train(
    matrix: FeatureMatrix,
    config: TrainConfig = TrainConfig(),
    class_order: Optional[Sequence[str]] = None,
    vocab_hash: str = "",
) -> LinearModel:
    """Train a one-vs-rest linear model on a labeled feature matrix.

    class_order fixes the class index order (e.g. from the coding scheme);
    by default classes sort lexicographically.  At least two classes with at
    least one sample each are required.
    """
    if matrix.labels is None:
        raise ValidationError("training requires a labeled matrix")
    labels = np.asarray(matrix.labels)
    present = set(labels.tolist())
    if len(present) < 2:
        raise DataError(
            f"training needs at least 2 classes, got {sorted(present)}"
        )
    if class_order is None:
        classes = tuple(sorted(present))
    else:
        classes = tuple(class_order)
        missing = present - set(classes)
        if missing:
            raise ValidationError(
                f"labels outside the class order: {sorted(missing)}"
            )

    X = matrix.X.tocsr()
    n_features = X.shape[1]
    weights = np.zeros((len(classes), n_features))
    bias = np.zeros(len(classes))
    for ci, cls in enumerate(classes):
        y = np.where(labels == cls, 1.0, -1.0)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(ci,))
        )
        weights[ci], bias[ci] = _train_binary(X, y, config, rng)
    return LinearModel(
        classes=classes,
        weights=weights,
        bias=bias,
        config=config,
        vocab_hash=vocab_hash,
    )


def predict(model: LinearModel, matrix: FeatureMatrix) -> tuple[list[str], np.ndarray]:
    """Class ids and per-class scores; argmax with lowest-index tie-break."""
    scores = model.scores(matrix.X)
    winners = np.argmax(scores, axis=1)  # first max = lowest class index
    return [model.classes[i] for i in winners], scores


def save_model(model: LinearModel, path) -> None:
    """JSON header line + dense little-endian float64 weight payload."""
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "n_features": model.n_features,
        "config": model.config.to_json(),
        "vocab_hash": model.vocab_hash,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())


def load_model(path) -> LinearModel:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("format") != MODEL_FORMAT or header.get("version") != MODEL_VERSION:
        raise DataError(f"not a model file: {path}")
    classes = tuple(header["classes"])
    n_features = header["n_features"]
    n_w = len(classes) * n_features
    flat = np.frombuffer(payload, dtype="<f8")
    if flat.size != n_w + len(classes):
        raise DataError("model payload size does not match header")
    weights = flat[:n_w].reshape(len(classes), n_features).copy()
    bias = flat[n_w:].copy()
    return LinearModel(
        classes=classes,
        weights=weights,
        bias=bias,
        config=TrainConfig.from_json(header["config"]),
        vocab_hash=header.get("vocab_hash", ""),
    )


def save_pipeline(directory, space: VectorSpace, model: LinearModel) -> None:
    """Persist a trained pipeline (vector space + model) as a directory."""
    from pathlib import Path

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "space.json", "w", encoding="utf-8") as fh:
        json.dump(space.to_json(), fh)
    save_model(model, d / "model.bin")


def load_pipeline(directory) -> tuple[VectorSpace, LinearModel]:
    from pathlib import Path

    d = Path(directory)
    with open(d / "space.json", "r", encoding="utf-8") as fh:
        space = VectorSpace.from_json(json.load(fh))
    model = load_model(d / "model.bin")
    if model.vocab_hash and model.vocab_hash != space.vocab_hash():
        raise DataError(
            f"{d}: model was trained on a different vocabulary than space.json"
        )
    return space, model


# -- repeated stratified holdout ----------------------------------------------


@dataclass(frozen=True)
class HoldoutRun:
    seed: int
    report: EvalReport
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    space: VectorSpace


def _mix_seed(a: int, b: int) -> int:
    return int(
        np.random.SeedSequence(entropy=a, spawn_key=(b,)).generate_state(1)[0]
    )


def stratified_split(
    strata: Sequence, split: float, rng: np.random.Generator
) -> tuple[list[int], list[int]]:
    """Per-stratum shuffled split; every stratum needs at least 2 items."""
    if not 0.0 < split < 1.0:
        raise ValidationError("split must lie strictly between 0 and 1")
    groups: dict = {}
    for i, key in enumerate(strata):
        groups.setdefault(key, []).append(i)
    train: list[int] = []
    test: list[int] = []
    for key in sorted(groups, key=str):
        members = groups[key]
        if len(members) < 2:
            raise DataError(
                f"stratum {key!r} has {len(members)} item(s); need >= 2 to split"
            )
        n_train = int(np.floor(split * len(members)))
        n_train = min(max(n_train, 1), len(members) - 1)
        perm = rng.permutation(len(members))
        train.extend(members[i] for i in perm[:n_train])
        test.extend(members[i] for i in perm[n_train:])
    return sorted(train), sorted(test)


def repeated_holdout(
    docs: Sequence[Document],
    seeds: Sequence[int],
    split: float = 0.8,
    strata: Optional[Sequence] = None,
    vectorizer: VectorizerConfig = VectorizerConfig(),
    train_config: TrainConfig = TrainConfig(),
    oversample_k: int = 5,
    class_order: Optional[Sequence[str]] = None,
    stopwords: Optional[frozenset[str]] = None,
    train_fn=None,
    predict_fn=None,
) -> list[HoldoutRun]:
    """Repeated stratified holdout over the given seeds.

    strata defaults to the class labels (class-distribution stratification);
    pass per-document bin indices to stratify on the population centrality
    distribution instead.  Each run fits preprocessing, vocabulary and
    oversampling on its training fold only, then evaluates on the held-out
    fold; zero-prediction classes are flagged in each report.

    Other classifiers plug in through train_fn(matrix, seed, class_order)
    returning any model, and predict_fn(model, matrix) returning the
    predicted labels; the defaults are the linear model in this module.
    """
    if any(d.label is None for d in docs):
        raise ValidationError("repeated_holdout requires labeled documents")
    if strata is None:
        strata = [d.label for d in docs]
    elif len(strata) != len(docs):
        raise ValidationError("strata length does not match documents")

    if train_fn is None:
        def train_fn(matrix, seed, order):
            return train(
                matrix,
                replace(train_config, seed=_mix_seed(train_config.seed, seed)),
                class_order=order,
            )
    if predict_fn is None:
        def predict_fn(model, matrix):
            return predict(model, matrix)[0]

    runs: list[HoldoutRun] = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        train_idx, test_idx = stratified_split(strata, split, rng)
        train_docs = [docs[i] for i in train_idx]
        test_docs = [docs[i] for i in test_idx]

        space = fit(train_docs, vectorizer, stopwords)
        # leakage guard: the vocabulary must originate from this train fold
        assert space.provenance["doc_digest"] == textpipe._doc_digest(train_docs)

        train_matrix = transform(space, train_docs, stopwords)
        test_matrix = transform(space, test_docs, stopwords)
        balanced, _ = oversample(train_matrix, k=oversample_k, seed=seed)
        model = train_fn(balanced, seed, class_order)
        predicted = predict_fn(model, test_matrix)
        truth = [d.label for d in test_docs]
        report = precision_recall(truth, predicted)
        runs.append(
            HoldoutRun(
                seed=seed,
                report=report,
                train_indices=tuple(train_idx),
                test_indices=tuple(test_idx),
                space=space,
            )
        )
    return runs
