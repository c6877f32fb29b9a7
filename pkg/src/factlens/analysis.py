"""Statistics behind the run reports: correlations with p-values, ordinal
inter-rater agreement, logistic regression over metric scores,
classification metrics, and the binned quality/complexity tables.

The correlation coefficients, their two-sided t-based p-values (via a
continued-fraction incomplete beta), and Krippendorff's alpha are computed
directly rather than through a stats dependency; the logistic model is
plain gradient descent with a backtracking line search, so fits are
deterministic.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import EvaluationReport, OrdinalScore, VerificationOutcome, numeric_to_level

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson and Spearman coefficients with two-sided p-values."""

    r: float
    rho: float
    p_r: float
    p_rho: float
    n: int


@dataclass(frozen=True)
class AgreementResult:
    """Chance-corrected ordinal agreement over raters and items."""

    alpha: float
    raters: int
    items: int


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationMetrics:
    """Per-class precision/recall/F1 plus macro averages and accuracy.

    ``pos`` treats the true labels as the positive class, ``neg`` the false
    labels; macro values average the two classes without weighting.
    """

    pos: ClassScores
    neg: ClassScores
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float


@dataclass(frozen=True)
class RegressionModel:
    """Logistic model over z-scored features; weights in standardized units."""

    weights: tuple[float, ...]
    bias: float
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]
    feature_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not (len(self.weights) == len(self.feature_means) == len(self.feature_stds)):
            raise ValueError("weights and standardization records must have equal length")

    def predict_proba(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        Z = (X - np.asarray(self.feature_means)) / np.asarray(self.feature_stds)
        z = Z @ np.asarray(self.weights) + self.bias
        return _sigmoid(z)

    def predict(self, features) -> np.ndarray:
        return self.predict_proba(features) >= 0.5


@dataclass(frozen=True)
class QualityBin:
    """One row of the metric-level performance table."""

    count: int
    metrics: ClassificationMetrics | None


@dataclass(frozen=True)
class ComplexityBin:
    """Fine-grained vs holistic performance for one sub-claim count."""

    count: int
    fine_grained: ClassificationMetrics
    holistic: ClassificationMetrics


# -- correlations -----------------------------------------------------------


def _check_pair(x: Sequence[float], y: Sequence[float]) -> tuple[list[float], list[float]]:
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError("need at least 3 paired observations")
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise ValueError("correlation undefined for a constant vector")
    return xs, ys


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Sample Pearson r with a two-sided p-value.

    The p-value comes from t = r * sqrt((n-2) / (1-r^2)) against a
    Student-t distribution with n-2 degrees of freedom.
    """
    xs, ys = _check_pair(x, y)
    n = len(xs)
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    sxy = math.fsum((a - mean_x) * (b - mean_y) for a, b in zip(xs, ys))
    sxx = math.fsum((a - mean_x) ** 2 for a in xs)
    syy = math.fsum((b - mean_y) ** 2 for b in ys)
    r = sxy / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    return r, _two_sided_p(r, n)


def _midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties replaced by their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman rho (Pearson over mid-ranks) with a two-sided p-value."""
    xs, ys = _check_pair(x, y)
    return pearson(_midranks(xs), _midranks(ys))


def correlate(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Both correlation coefficients and p-values for one paired sample."""
    r, p_r = pearson(x, y)
    rho, p_rho = spearman(x, y)
    return CorrelationResult(r=r, rho=rho, p_r=p_r, p_rho=p_rho, n=len(x))


def _two_sided_p(r: float, n: int) -> float:
    df = n - 2
    rr = r * r
    if rr >= 1.0:
        return 0.0
    t_squared = rr * df / (1.0 - rr)
    # P(|T| > |t|) for Student-t equals the regularized incomplete beta
    # I_x(df/2, 1/2) at x = df / (df + t^2).
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t_squared))


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) by the standard continued-fraction expansion."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only for x below the split point.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    max_iterations = 300
    eps = 3e-15
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        coeff = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


# -- Krippendorff's alpha ---------------------------------------------------


def krippendorff_ordinal(ratings: Sequence[Sequence[int | None]]) -> float:
    """Ordinal Krippendorff's alpha over an items x raters matrix.

    ``None`` marks a missing rating; items with fewer than two ratings drop
    out (pairwise exclusion). The ordinal distance between categories c <= k
    is the squared sum of category frequencies from c through k minus half
    the endpoint frequencies. Zero-disagreement data scores 1.0.
    """
    if not ratings:
        raise ValueError("no items to compare")
    width = len(ratings[0])
    if width < 2:
        raise ValueError("need at least 2 raters")
    if any(len(row) != width for row in ratings):
        raise ValueError("ragged ratings matrix")

    units = [[v for v in row if v is not None] for row in ratings]
    units = [u for u in units if len(u) >= 2]
    if not units:
        raise ValueError("fewer than 2 paired ratings")

    # Marginals of the coincidence matrix equal the raw value frequencies
    # over pairable values.
    marginals: Counter[int] = Counter()
    for unit in units:
        marginals.update(unit)
    n = sum(marginals.values())
    categories = sorted(marginals)
    if len(categories) == 1:
        return 1.0  # zero observed disagreement by convention

    coincidence: Counter[tuple[int, int]] = Counter()
    for unit in units:
        weight = 1.0 / (len(unit) - 1)
        for i, first in enumerate(unit):
            for j, second in enumerate(unit):
                if i != j:
                    coincidence[(first, second)] += weight

    def ordinal_distance(c: int, k: int) -> float:
        lo, hi = min(c, k), max(c, k)
        between = sum(marginals[g] for g in categories if lo <= g <= hi)
        return (between - (marginals[c] + marginals[k]) / 2.0) ** 2

    observed = 0.0
    expected = 0.0
    for ci, c in enumerate(categories):
        for k in categories[ci + 1:]:
            distance = ordinal_distance(c, k)
            observed += (coincidence[(c, k)] + coincidence[(k, c)]) * distance
            expected += 2.0 * marginals[c] * marginals[k] * distance
    return 1.0 - (n - 1) * observed / expected


# -- logistic regression ----------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


def logistic_loss_grad(
    theta: np.ndarray, features: np.ndarray, targets: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood with an l2 penalty on the weights.

    ``theta`` stacks the weight vector and a trailing bias; the bias is not
    regularized. This is the exact objective minimized by ``fit_logistic``.
    """
    w = theta[:-1]
    bias = theta[-1]
    signs = np.where(targets, 1.0, -1.0)
    margins = signs * (features @ w + bias)
    loss = float(np.logaddexp(0.0, -margins).mean() + 0.5 * l2 * (w @ w))
    # d/dz log(1 + exp(-m)) = -sigmoid(-m); chain through z = Xw + b.
    dz = -(signs * _sigmoid(-margins)) / len(signs)
    grad_w = features.T @ dz + l2 * w
    grad_b = dz.sum()
    return loss, np.append(grad_w, grad_b)


def fit_logistic(
    features,
    targets,
    l2: float = 0.0,
    max_iterations: int = 10_000,
    tolerance: float = 1e-8,
    feature_names: Sequence[str] = (),
    loss_callback: Callable[[float], None] | None = None,
) -> RegressionModel:
    """Fit a logistic regression by gradient descent with line search.

    Features are z-scored internally (constant columns pass through); the
    weights start at zero, steps are chosen by backtracking (Armijo), and
    iteration stops when the gradient infinity-norm drops below
    ``tolerance`` or after ``max_iterations``. The loss never increases, and
    repeated fits are identical.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("features must form a non-empty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    y = np.asarray([bool(t) for t in targets])
    if len(y) != X.shape[0]:
        raise ValueError("one target per feature row required")
    if y.all() or not y.any():
        raise ValueError("targets must contain both classes")
    if l2 < 0:
        raise ValueError("l2 must be >= 0")

    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds == 0.0, 1.0, stds)
    Z = (X - means) / stds

    theta = np.zeros(X.shape[1] + 1)
    loss, grad = logistic_loss_grad(theta, Z, y, l2)
    if loss_callback is not None:
        loss_callback(loss)
    for _ in range(max_iterations):
        if np.abs(grad).max() < tolerance:
            break
        grad_norm_sq = float(grad @ grad)
        step = 1.0
        while True:
            candidate = theta - step * grad
            new_loss, new_grad = logistic_loss_grad(candidate, Z, y, l2)
            if new_loss <= loss - 1e-4 * step * grad_norm_sq:
                break
            step *= 0.5
            if step < 1e-20:
                break
        if new_loss > loss:
            break  # no descent direction left at float precision
        theta, loss, grad = candidate, new_loss, new_grad
        if loss_callback is not None:
            loss_callback(loss)

    return RegressionModel(
        weights=tuple(float(v) for v in theta[:-1]),
        bias=float(theta[-1]),
        feature_means=tuple(float(v) for v in means),
        feature_stds=tuple(float(v) for v in stds),
        feature_names=tuple(feature_names),
    )


# -- classification metrics -------------------------------------------------


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def classification_metrics(
    predicted: Sequence[bool], gold: Sequence[bool]
) -> ClassificationMetrics:
    """Per-class and macro-averaged precision/recall/F1 plus accuracy."""
    preds = [bool(p) for p in predicted]
    golds = [bool(g) for g in gold]
    if len(preds) != len(golds):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(golds)}")
    if not preds:
        raise ValueError("need at least one prediction")
    tp = sum(1 for p, g in zip(preds, golds) if p and g)
    fp = sum(1 for p, g in zip(preds, golds) if p and not g)
    fn = sum(1 for p, g in zip(preds, golds) if not p and g)
    tn = len(preds) - tp - fp - fn
    pos_p, pos_r, pos_f1 = _prf(tp, fp, fn)
    neg_p, neg_r, neg_f1 = _prf(tn, fn, fp)
    return ClassificationMetrics(
        pos=ClassScores(pos_p, pos_r, pos_f1, support=tp + fn),
        neg=ClassScores(neg_p, neg_r, neg_f1, support=tn + fp),
        macro_precision=(pos_p + neg_p) / 2,
        macro_recall=(pos_r + neg_r) / 2,
        macro_f1=(pos_f1 + neg_f1) / 2,
        accuracy=(tp + tn) / len(preds),
    )


# -- binned tables ----------------------------------------------------------


def _check_aligned(reports, outcomes, golds) -> None:
    if not (len(reports) == len(outcomes) == len(golds)):
        raise ValueError("reports, outcomes, and golds must align")
    for report, outcome in zip(reports, outcomes):
        if report.claim_id != outcome.claim_id:
            raise ValueError(
                f"misaligned inputs: report {report.claim_id!r} vs outcome {outcome.claim_id!r}"
            )


def metric_level_of(report: EvaluationReport, metric: str) -> OrdinalScore:
    """The claim-level bin of a metric: its direct level when the metric is
    claim-scoped, otherwise the rounded mean of the per-sub-claim scores."""
    if metric in report.claim_level:
        return report.claim_level[metric]
    if metric in report.means:
        return numeric_to_level(report.means[metric])
    raise ValueError(f"metric {metric!r} missing from report {report.claim_id!r}")


def bin_by_metric_level(
    reports: Sequence[EvaluationReport],
    outcomes: Sequence[VerificationOutcome],
    golds: Sequence[bool],
    metric: str,
) -> dict[OrdinalScore, QualityBin]:
    """Verification performance grouped by a metric's claim-level bin.

    Only multi-sub-claim instances participate. Returns a row per level
    (empty bins carry a count of 0 and no metrics); with no multi-sub-claim
    instances at all, the table is empty and a warning is logged.
    """
    _check_aligned(reports, outcomes, golds)
    rows = [
        (report, outcome, gold)
        for report, outcome, gold in zip(reports, outcomes, golds)
        if report.n_subclaims > 1
    ]
    if not rows:
        logger.warning("no multi-sub-claim instances to bin by %s", metric)
        return {}
    grouped: dict[OrdinalScore, tuple[list[bool], list[bool]]] = {
        level: ([], []) for level in OrdinalScore
    }
    for report, outcome, gold in rows:
        level = metric_level_of(report, metric)
        grouped[level][0].append(outcome.aggregated_label)
        grouped[level][1].append(bool(gold))
    return {
        level: QualityBin(
            count=len(preds),
            metrics=classification_metrics(preds, gold_labels) if preds else None,
        )
        for level, (preds, gold_labels) in grouped.items()
    }


def bin_by_subclaim_count(
    outcomes: Sequence[VerificationOutcome],
    holistic_labels: Sequence[bool],
    golds: Sequence[bool],
) -> dict[int, ComplexityBin]:
    """Fine-grained vs holistic performance per sub-claim count.

    The sub-claim count of an instance stands in for its complexity; the
    per-count rows double as the count distribution.
    """
    if not (len(outcomes) == len(holistic_labels) == len(golds)):
        raise ValueError("outcomes, holistic labels, and golds must align")
    if any(label is None for label in holistic_labels):
        raise ValueError("holistic labels are required for complexity binning")
    grouped: dict[int, tuple[list[bool], list[bool], list[bool]]] = {}
    for outcome, holistic, gold in zip(outcomes, holistic_labels, golds):
        fine, hol, gold_labels = grouped.setdefault(outcome.n_subclaims, ([], [], []))
        fine.append(outcome.aggregated_label)
        hol.append(bool(holistic))
        gold_labels.append(bool(gold))
    return {
        n: ComplexityBin(
            count=len(fine),
            fine_grained=classification_metrics(fine, gold_labels),
            holistic=classification_metrics(hol, gold_labels),
        )
        for n, (fine, hol, gold_labels) in sorted(grouped.items())
    }
