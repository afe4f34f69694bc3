"""Statistics layer: precision/recall, kappa agreement, proportion intervals.

Numbers here feed three workflows: per-class classifier evaluation
aggregated by geometric means; inter-annotator agreement (Cohen's kappa for
two raters, Fleiss's for more); and population-scale comparison of two
classifiers via per-class agreement counts with Agresti-Coull confidence
intervals plus stratifiable disagreement sampling.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_Z = 1.96
GMEAN_EPSILON = 1e-6

COHEN = "cohen"
FLEISS = "fleiss"


@dataclass(frozen=True)
class ClassStats:
    precision: float
    recall: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    per_class: Mapping[str, ClassStats]
    gmean_precision: float
    gmean_recall: float
    zero_prediction_classes: frozenset[str]
    epsilon_substituted: frozenset[str] = frozenset()

    def to_json(self) -> dict:
        return {
            "per_class": {
                c: {"precision": s.precision, "recall": s.recall, "support": s.support}
                for c, s in sorted(self.per_class.items())
            },
            "gmean_precision": self.gmean_precision,
            "gmean_recall": self.gmean_recall,
            "zero_prediction_classes": sorted(self.zero_prediction_classes),
            "epsilon_substituted": sorted(self.epsilon_substituted),
        }


@dataclass(frozen=True)
class ClassAgreement:
    agree: int
    only_a: int
    only_b: int
    ci: tuple[float, float]

    @property
    def n(self) -> int:
        return self.agree + self.only_a + self.only_b


@dataclass(frozen=True)
class AgreementReport:
    per_class: Mapping[str, ClassAgreement]
    z: float

    def to_json(self) -> dict:
        return {
            "z": self.z,
            "per_class": {
                c: {
                    "agree": s.agree,
                    "only_a": s.only_a,
                    "only_b": s.only_b,
                    "ci": list(s.ci),
                }
                for c, s in sorted(self.per_class.items())
            },
        }


@dataclass(frozen=True)
class KappaResult:
    kind: str
    value: float
    n_items: int
    n_raters: int


def precision_recall(
    truth: Sequence[str], predicted: Sequence[str]
) -> EvalReport:
    """Per-class precision TP/(TP+FP) and recall TP/(TP+FN).

    Classes the model never predicted are flagged and given precision 0;
    geometric means substitute GMEAN_EPSILON for exact zeros (flagged) so a
    single dead class does not make the summary undefined.
    """
    if len(truth) != len(predicted):
        raise ValidationError(
            f"length mismatch: {len(truth)} truth vs {len(predicted)} predicted"
        )
    if len(truth) == 0:
        raise ValidationError("cannot evaluate zero items")
    truth_arr = np.asarray(truth)
    pred_arr = np.asarray(predicted)
    classes = sorted(set(truth_arr.tolist()) | set(pred_arr.tolist()))

    per_class: dict[str, ClassStats] = {}
    zero_pred: set[str] = set()
    for c in classes:
        tp = int(np.sum((truth_arr == c) & (pred_arr == c)))
        fp = int(np.sum((truth_arr != c) & (pred_arr == c)))
        fn = int(np.sum((truth_arr == c) & (pred_arr != c)))
        support = tp + fn
        if tp + fp == 0:
            zero_pred.add(c)
            precision = 0.0
        else:
            precision = tp / (tp + fp)
        recall = tp / support if support > 0 else 0.0
        per_class[c] = ClassStats(precision, recall, support)

    gp, eps_p = _gmean_with_epsilon([s.precision for s in per_class.values()])
    gr, eps_r = _gmean_with_epsilon([s.recall for s in per_class.values()])
    eps_classes = {
        c
        for c, s in per_class.items()
        if s.precision == 0.0 or s.recall == 0.0
    } if (eps_p or eps_r) else set()
    return EvalReport(
        per_class=per_class,
        gmean_precision=gp,
        gmean_recall=gr,
        zero_prediction_classes=frozenset(zero_pred),
        epsilon_substituted=frozenset(eps_classes),
    )


def geometric_mean(
    values: Sequence[float], zero_epsilon: Optional[float] = None
) -> float:
    """exp(mean(ln v)).  Values must be positive; exact zeros are accepted
    only under an explicit epsilon policy (substituted and not an error)."""
    if len(values) == 0:
        raise ValidationError("geometric mean of an empty sequence")
    adjusted = []
    for v in values:
        if v < 0:
            raise ValidationError(f"geometric mean undefined for negative value {v}")
        if v == 0:
            if zero_epsilon is None:
                raise ValidationError(
                    "geometric mean undefined for zero without an epsilon policy"
                )
            v = zero_epsilon
        adjusted.append(v)
    return float(np.exp(np.mean(np.log(adjusted))))


def _gmean_with_epsilon(values: Sequence[float]) -> tuple[float, bool]:
    substituted = any(v == 0.0 for v in values)
    return geometric_mean(values, zero_epsilon=GMEAN_EPSILON), substituted


def cohen_kappa(a: Sequence[str], b: Sequence[str]) -> KappaResult:
    """Chance-corrected agreement between two raters.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from the product of the raters'
    marginal distributions; defined as 1.0 when both are 1 (total agreement
    on a single category).
    """
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise ValidationError("kappa of zero items")
    n = len(a)
    a_arr = np.asarray(a)
    b_arr = np.asarray(b)
    categories = sorted(set(a_arr.tolist()) | set(b_arr.tolist()))
    p_o = float(np.mean(a_arr == b_arr))
    p_e = 0.0
    for c in categories:
        p_e += float(np.mean(a_arr == c)) * float(np.mean(b_arr == c))
    if p_e == 1.0:
        value = 1.0 if p_o == 1.0 else 0.0
    else:
        value = (p_o - p_e) / (1.0 - p_e)
    return KappaResult(COHEN, value, n, 2)


def fleiss_kappa(table) -> KappaResult:
    """Fleiss's kappa from an items x categories matrix of rating counts.

    Every item must carry the same number of ratings r >= 2.
    """
    counts = np.asarray(table, dtype=np.float64)
    if counts.ndim != 2 or counts.size == 0:
        raise ValidationError("rating table must be a non-empty 2-d array")
    if np.any(counts < 0):
        raise ValidationError("rating counts must be non-negative")
    row_sums = counts.sum(axis=1)
    r = row_sums[0]
    if np.any(row_sums != r):
        raise ValidationError("ragged rater counts: all items need the same raters")
    if r < 2:
        raise ValidationError("Fleiss's kappa needs at least 2 ratings per item")
    n_items = counts.shape[0]

    p_j = counts.sum(axis=0) / counts.sum()
    p_i = (np.sum(counts * counts, axis=1) - r) / (r * (r - 1))
    p_bar = float(np.mean(p_i))
    p_e = float(np.sum(p_j**2))
    if p_e == 1.0:
        value = 1.0 if p_bar == 1.0 else 0.0
    else:
        value = (p_bar - p_e) / (1.0 - p_e)
    return KappaResult(FLEISS, value, n_items, int(r))


def agresti_coull(successes: int, n: int, z: float = DEFAULT_Z) -> tuple[float, float]:
    """Adjusted binomial proportion interval, clamped to [0, 1].

    n_tilde = n + z^2;  p_tilde = (X + z^2/2) / n_tilde;
    interval = p_tilde +/- z * sqrt(p_tilde (1 - p_tilde) / n_tilde).

    The usual applicability guidance (n > 40) is the caller's concern.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if successes < 0 or successes > n:
        raise ValidationError(f"successes must lie in [0, {n}], got {successes}")
    n_tilde = n + z * z
    p_tilde = (successes + z * z / 2.0) / n_tilde
    half = z * math.sqrt(p_tilde * (1.0 - p_tilde) / n_tilde)
    return (max(0.0, p_tilde - half), min(1.0, p_tilde + half))


def agreement(
    pred_a: Mapping[str, str], pred_b: Mapping[str, str], z: float = DEFAULT_Z
) -> AgreementReport:
    """Per-class agreement counts for two label assignments over one universe.

    For class c: agree = #{a=c and b=c}, only_a = #{a=c, b!=c},
    only_b = #{a!=c, b=c}; the CI is the Agresti-Coull interval of
    agree / (agree + only_a + only_b).
    """
    if set(pred_a) != set(pred_b):
        raise ValidationError("prediction universes differ")
    if not pred_a:
        raise ValidationError("empty prediction universe")
    ids = sorted(pred_a)
    a_arr = np.asarray([pred_a[i] for i in ids])
    b_arr = np.asarray([pred_b[i] for i in ids])
    classes = sorted(set(a_arr.tolist()) | set(b_arr.tolist()))

    per_class: dict[str, ClassAgreement] = {}
    for c in classes:
        in_a = a_arr == c
        in_b = b_arr == c
        agree = int(np.sum(in_a & in_b))
        only_a = int(np.sum(in_a & ~in_b))
        only_b = int(np.sum(~in_a & in_b))
        n = agree + only_a + only_b
        ci = agresti_coull(agree, n, z) if n > 0 else (0.0, 1.0)
        per_class[c] = ClassAgreement(agree, only_a, only_b, ci)
    return AgreementReport(per_class=per_class, z=z)


def disagreement_sample(
    pred_a: Mapping[str, str],
    pred_b: Mapping[str, str],
    per_class: int,
    seed: int = 0,
) -> list[str]:
    """Seeded uniform draw of disagreement posts, per class.

    For each class, candidates are the posts that exactly one classifier
    assigned to it; classes with fewer than per_class candidates contribute
    all of them (with a warning).  Deterministic for a fixed seed.
    """
    if per_class < 1:
        raise ValidationError("per_class must be >= 1")
    if set(pred_a) != set(pred_b):
        raise ValidationError("prediction universes differ")
    ids = sorted(pred_a)
    classes = sorted(
        {pred_a[i] for i in ids} | {pred_b[i] for i in ids}
    )
    picked: list[str] = []
    for ci, c in enumerate(classes):
        candidates = [
            pid
            for pid in ids
            if (pred_a[pid] == c) != (pred_b[pid] == c)
        ]
        if not candidates:
            continue
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(ci,))
        )
        if len(candidates) <= per_class:
            if len(candidates) < per_class:
                warnings.warn(
                    f"class {c!r}: only {len(candidates)} disagreement posts "
                    f"available (wanted {per_class})",
                    stacklevel=2,
                )
            picked.extend(candidates)
        else:
            take = rng.choice(len(candidates), size=per_class, replace=False)
            picked.extend(candidates[i] for i in sorted(take.tolist()))
    return picked


def aggregate_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Geometric-mean aggregation of repeated-holdout reports.

    Per-class precision/recall are geometric means over the runs (exact
    zeros epsilon-substituted and flagged); the summary means then average
    over classes, mirroring single-report summaries.
    """
    if not reports:
        raise ValidationError("no reports to aggregate")
    classes = sorted({c for r in reports for c in r.per_class})
    per_class: dict[str, ClassStats] = {}
    eps_classes: set[str] = set()
    zero_pred: set[str] = set()
    for c in classes:
        precs = [r.per_class[c].precision for r in reports if c in r.per_class]
        recs = [r.per_class[c].recall for r in reports if c in r.per_class]
        supports = [r.per_class[c].support for r in reports if c in r.per_class]
        if any(v == 0.0 for v in precs + recs):
            eps_classes.add(c)
        if any(c in r.zero_prediction_classes for r in reports):
            zero_pred.add(c)
        per_class[c] = ClassStats(
            geometric_mean(precs, zero_epsilon=GMEAN_EPSILON),
            geometric_mean(recs, zero_epsilon=GMEAN_EPSILON),
            int(np.sum(supports)),
        )
    gp = geometric_mean(
        [s.precision for s in per_class.values()], zero_epsilon=GMEAN_EPSILON
    )
    gr = geometric_mean(
        [s.recall for s in per_class.values()], zero_epsilon=GMEAN_EPSILON
    )
    return EvalReport(
        per_class=per_class,
        gmean_precision=gp,
        gmean_recall=gr,
        zero_prediction_classes=frozenset(zero_pred),
        epsilon_substituted=frozenset(eps_classes),
    )


def zero_prediction_rate(reports: Sequence[EvalReport]) -> dict[str, float]:
    """Fraction of runs in which each class received no prediction at all."""
    classes = sorted({c for r in reports for c in r.per_class})
    return {
        c: sum(c in r.zero_prediction_classes for r in reports) / len(reports)
        for c in classes
    }


# -- aligned text tables ------------------------------------------------------


def _render_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
        for i in range(len(header))
    ]
    def fmt(row):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
    lines = [fmt(header), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines) + "\n"


def format_eval_table(report: EvalReport, title: str = "") -> str:
    rows = [
        [c, f"{s.precision:.2f}", f"{s.recall:.2f}", str(s.support)]
        for c, s in sorted(report.per_class.items())
    ]
    rows.append(
        [
            "Geometric Mean",
            f"{report.gmean_precision:.2f}",
            f"{report.gmean_recall:.2f}",
            "",
        ]
    )
    table = _render_table(["Class", "Precision", "Recall", "Support"], rows)
    return (title + "\n" + table) if title else table


def format_agreement_table(report: AgreementReport, title: str = "") -> str:
    rows = [
        [
            c,
            str(s.agree),
            str(s.only_a),
            str(s.only_b),
            f"({s.ci[0]:.2f},{s.ci[1]:.2f})",
        ]
        for c, s in sorted(report.per_class.items())
    ]
    table = _render_table(
        ["Class", "#Agree", "#A only", "#B only", "CI Agreement"], rows
    )
    return (title + "\n" + table) if title else table
