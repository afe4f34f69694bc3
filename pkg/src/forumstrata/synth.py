"""Synthetic forum generator with controllable activity skew and class structure.

Real forum corpora cannot be redistributed, so the pipeline is exercised on
generated ones.  Member post counts follow a truncated discrete power law
(P(k) proportional to k^-alpha, sampled by inverse CDF), reproducing the
heavy activity tail that makes stratified sampling interesting.  Each post
draws a class from the configured mix, reweighted per member by

    weight(c | member) = mix[c] * exp(bias[c] * q)

where q in [0, 1] is the member's log-scaled activity level (0 for
single-post members, 1 for the most active); a positive bias concentrates
the class among high-activity members.  Post text mixes
class-specific signal tokens with shared noise tokens and filler words so a
lexical classifier has something real to learn.

Generation is single-threaded and fully determined by the seed: a fixed
config reproduces the corpus byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Mapping

import numpy as np

from .errors import DataError, ValidationError

_FILLER = ("the", "and", "you", "for", "with", "this", "that", "have", "from", "not")
_POST_TYPES = ("offer", "request", "exchange", "tutorial")


@dataclass(frozen=True)
class SynthConfig:
    n_members: int = 1000
    n_threads: int = 400
    n_boards: int = 5
    activity_exponent: float = 2.0
    class_mix: Mapping[str, float] = field(
        default_factory=lambda: {"benign": 0.8, "illicit": 0.2}
    )
    class_centrality_bias: Mapping[str, float] = field(default_factory=dict)
    # classes with no vocabulary of their own; their posts are generic noise
    plain_classes: frozenset = frozenset()
    vocab_per_class: int = 30
    # Zipf exponent of the within-class token distribution (0 = uniform):
    # head tokens recur across posts, tail tokens stay rare
    token_skew: float = 1.0
    noise_vocab: int = 150
    signal_tokens_per_post: int = 3
    noise_tokens_per_post: int = 4
    max_posts_per_member: int = 10_000
    seed: int = 0
    forum_name: str = "synthforum"

    def __post_init__(self):
        total = sum(self.class_mix.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"class_mix fractions sum to {total}, expected 1")
        if any(f < 0 for f in self.class_mix.values()):
            raise ValidationError("class_mix fractions must be non-negative")
        if self.activity_exponent <= 1.0:
            raise ValidationError("activity_exponent must exceed 1")
        if self.n_members < 1 or self.n_threads < 1 or self.n_boards < 1:
            raise ValidationError("counts must be positive")
        if self.vocab_per_class < 1:
            raise ValidationError("vocab_per_class must be positive")

    def to_json(self) -> dict:
        return {
            "n_members": self.n_members,
            "n_threads": self.n_threads,
            "n_boards": self.n_boards,
            "activity_exponent": self.activity_exponent,
            "class_mix": dict(self.class_mix),
            "class_centrality_bias": dict(self.class_centrality_bias),
            "plain_classes": sorted(self.plain_classes),
            "vocab_per_class": self.vocab_per_class,
            "token_skew": self.token_skew,
            "noise_vocab": self.noise_vocab,
            "signal_tokens_per_post": self.signal_tokens_per_post,
            "noise_tokens_per_post": self.noise_tokens_per_post,
            "max_posts_per_member": self.max_posts_per_member,
            "seed": self.seed,
            "forum_name": self.forum_name,
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SynthConfig":
        data = dict(data)
        if "plain_classes" in data:
            data["plain_classes"] = frozenset(data["plain_classes"])
        return cls(**data)


def power_law_counts(
    rng: np.random.Generator, alpha: float, size: int, k_max: int
) -> np.ndarray:
    """Inverse-CDF draws from P(k) proportional to k^-alpha, k = 1..k_max."""
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    pmf = ks**-alpha
    cdf = np.cumsum(pmf / pmf.sum())
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="left") + 1


def class_tokens(cls: str, vocab_per_class: int) -> list[str]:
    safe = "".join(ch for ch in cls.lower() if ch.isalnum()) or "cls"
    return [f"{safe}sig{i}" for i in range(vocab_per_class)]


def generate(config: SynthConfig) -> tuple[list[dict], dict[str, str]]:
    """Produce ingestion-format post records plus ground-truth labels.

    Returns (records, labels) where records match the JSON-lines ingestion
    schema exactly and labels maps post_id -> class.
    """
    rng = np.random.default_rng(config.seed)
    classes = sorted(config.class_mix)
    mix = np.asarray([config.class_mix[c] for c in classes])
    bias = np.asarray(
        [config.class_centrality_bias.get(c, 0.0) for c in classes]
    )
    vocab = {c: class_tokens(c, config.vocab_per_class) for c in classes}
    noise = [f"noise{i}" for i in range(config.noise_vocab)]

    token_w = np.arange(1, config.vocab_per_class + 1, dtype=np.float64)
    token_w = token_w**-config.token_skew
    token_w /= token_w.sum()

    counts = power_law_counts(
        rng, config.activity_exponent, config.n_members, config.max_posts_per_member
    )
    total_posts = int(counts.sum())
    for c, frac in config.class_mix.items():
        if frac > 0 and frac * total_posts < 1:
            raise DataError(
                f"infeasible class mix: {c!r} at fraction {frac} yields "
                f"fewer than one post among {total_posts}"
            )

    # activity level on a log scale: 0 for single-post members, 1 for the
    # most active one; members with equal activity share a level, and the
    # level grows linearly across the decade bins used downstream
    max_count = counts.max()
    if max_count > 1:
        quantile = np.log(counts) / np.log(max_count)
    else:
        quantile = np.zeros(config.n_members)

    # thread popularity: Zipf weights so some threads run hot
    thread_w = 1.0 / np.arange(1, config.n_threads + 1)
    thread_w /= thread_w.sum()

    base_time = datetime(2017, 1, 1, tzinfo=timezone.utc)
    records: list[dict] = []
    labels: dict[str, str] = {}
    post_num = 0
    for m in range(config.n_members):
        member_id = f"m{m:05d}"
        cls_weights = mix * np.exp(bias * quantile[m])
        cls_weights = cls_weights / cls_weights.sum()
        for _ in range(int(counts[m])):
            post_num += 1
            post_id = f"p{post_num:07d}"
            t_idx = int(rng.choice(config.n_threads, p=thread_w))
            cls = classes[int(rng.choice(len(classes), p=cls_weights))]
            if cls in config.plain_classes:
                sig_words = [
                    noise[i]
                    for i in rng.choice(
                        config.noise_vocab, size=config.signal_tokens_per_post
                    )
                ]
            else:
                sig_words = [
                    vocab[cls][i]
                    for i in rng.choice(
                        config.vocab_per_class,
                        size=config.signal_tokens_per_post,
                        p=token_w,
                    )
                ]
            nz = rng.choice(config.noise_vocab, size=config.noise_tokens_per_post)
            fillers = rng.choice(len(_FILLER), size=2)
            words = (
                sig_words
                + [noise[i] for i in nz]
                + [_FILLER[i] for i in fillers]
            )
            board_idx = t_idx % config.n_boards
            records.append(
                {
                    "forum": config.forum_name,
                    "board": f"board{board_idx}",
                    "thread_id": f"t{t_idx:05d}",
                    "thread_title": f"topic {t_idx}",
                    "member_id": member_id,
                    "post_id": post_id,
                    "content": " ".join(words),
                    "post_type": _POST_TYPES[int(rng.integers(len(_POST_TYPES)))],
                    "timestamp": (base_time + timedelta(minutes=post_num)).isoformat(),
                }
            )
            labels[post_id] = cls
    return records, labels


def corpus_jsonl(records: list[dict]) -> str:
    return "\n".join(json.dumps(r, sort_keys=True) for r in records) + "\n"


def labels_csv(labels: Mapping[str, str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["post_id", "class"])
    for pid in sorted(labels):
        writer.writerow([pid, labels[pid]])
    return buf.getvalue()


def write_corpus(config: SynthConfig, corpus_path, labels_path) -> dict:
    """Write the JSON-lines corpus and ground-truth CSV; returns summary stats."""
    records, labels = generate(config)
    with open(corpus_path, "w", encoding="utf-8") as fh:
        fh.write(corpus_jsonl(records))
    with open(labels_path, "w", encoding="utf-8") as fh:
        fh.write(labels_csv(labels))
    class_counts: dict[str, int] = {}
    for cls in labels.values():
        class_counts[cls] = class_counts.get(cls, 0) + 1
    return {
        "posts": len(records),
        "members": len({r["member_id"] for r in records}),
        "threads": len({r["thread_id"] for r in records}),
        "class_counts": dict(sorted(class_counts.items())),
    }


def read_labels_csv(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["post_id", "class"]:
            raise DataError(f"{path}: expected header post_id,class")
        return {row[0]: row[1] for row in reader if row}
