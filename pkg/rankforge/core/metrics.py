"""
Exact IR metrics from scores and graded labels.

Every metric works on a ``SortedLabels`` view: the labels reordered by
descending predicted score (ties by ascending document index).
"""

import numpy as np
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from rankforge.core.config import settings
from rankforge.core.exceptions import ConfigError, UsageError
from rankforge.core.logging import get_logger
from rankforge.models.base import ArrayModel
from rankforge.models.reports import METRIC_NAMES, EvalReport, QueryMetrics, metric_key

logger = get_logger(__name__)


class SortedLabels(ArrayModel):
    y_star_star: np.ndarray
    b_star_star: np.ndarray
    cumulative: np.ndarray
    order: np.ndarray

    @property
    def size(self) -> int:
        return int(self.y_star_star.shape[0])

    @property
    def n_relevant(self) -> int:
        return int(self.cumulative[-1]) if self.size else 0


def sorted_labels_from_order(labels, order) -> SortedLabels:
    """Labels permuted by an explicit ranking (``order[j]`` = document at position j+1)."""
    labels = np.asarray(labels)
    order = np.asarray(order, dtype=np.int64)
    y_ss = labels[order]
    b_ss = (y_ss > 0).astype(np.int64)
    return SortedLabels(y_star_star=y_ss, b_star_star=b_ss, cumulative=np.cumsum(b_ss), order=order)


def sort_by_scores(scores, labels) -> SortedLabels:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise UsageError(f"{scores.shape[0]} scores for {labels.shape[0]} labels")
    # stable sort on negated scores: descending, ties by ascending index
    order = np.argsort(-scores, kind="stable")
    return sorted_labels_from_order(labels, order)


def _check_k(k: int):
    if k < 1:
        raise UsageError(f"cutoff must be >= 1, got {k}")


def precision_at_k(sl: SortedLabels, k: int) -> float:
    _check_k(k)
    return float(sl.b_star_star[:k].sum()) / k


def average_precision(sl: SortedLabels, k: Optional[int] = None) -> float:
    """AP over the whole list, or MAP@k = sum_{j<=k} b_j Pre@j / min(|Y+|, k)."""
    n_rel = sl.n_relevant
    if n_rel == 0:
        return 0.0
    positions = np.arange(1, sl.size + 1)
    prec = sl.cumulative / positions
    if k is None:
        return float((sl.b_star_star * prec).sum()) / n_rel
    _check_k(k)
    return float((sl.b_star_star[:k] * prec[:k]).sum()) / min(n_rel, k)


def dcg(labels: np.ndarray, k: int) -> float:
    gains = np.exp2(labels[:k].astype(np.float64)) - 1.0
    discounts = np.log2(np.arange(2, gains.size + 2))
    return float((gains / discounts).sum())


def ndcg_at_k(sl: SortedLabels, k: int) -> float:
    _check_k(k)
    ideal = dcg(np.sort(sl.y_star_star)[::-1], k)
    if ideal == 0.0:
        return 0.0
    return dcg(sl.y_star_star, k) / ideal


def err(labels: np.ndarray, k: int, max_grade: int) -> float:
    """Cascade expected reciprocal rank with stop probability (2^y - 1) / 2^max."""
    pr = (np.exp2(labels[:k].astype(np.float64)) - 1.0) / 2.0 ** max_grade
    not_stopped = np.concatenate(([1.0], np.cumprod(1.0 - pr)[:-1]))
    return float((not_stopped * pr / np.arange(1, pr.size + 1)).sum())


def nerr_at_k(sl: SortedLabels, k: int) -> float:
    _check_k(k)
    if sl.size == 0:
        return 0.0
    max_grade = int(sl.y_star_star.max())
    if max_grade == 0:
        return 0.0
    ideal = err(np.sort(sl.y_star_star)[::-1], k, max_grade)
    return err(sl.y_star_star, k, max_grade) / ideal


METRIC_FUNCTIONS = {
    "precision": precision_at_k,
    "map": average_precision,
    "ndcg": ndcg_at_k,
    "nerr": nerr_at_k,
}


def query_metrics(sl: SortedLabels, cutoffs: Sequence[int]) -> Dict[str, float]:
    return {metric_key(name, k): METRIC_FUNCTIONS[name](sl, k)
            for name in METRIC_NAMES for k in cutoffs}


def evaluate_queries(scored: Iterable[Tuple[str, np.ndarray, np.ndarray]],
                     cutoffs: Sequence[int] = tuple(settings.CUTOFFS)) -> EvalReport:
    """Mean of every metric family at every cutoff over (qid, scores, labels) triples.

    Queries without relevant documents score 0 everywhere, are counted, and
    are flagged.
    """
    cutoffs = list(cutoffs)
    if not cutoffs:
        raise ConfigError("at least one cutoff is required")
    for k in cutoffs:
        _check_k(k)

    per_query: List[QueryMetrics] = []
    for qid, scores, labels in scored:
        sl = sort_by_scores(scores, labels)
        per_query.append(QueryMetrics(qid=qid, values=query_metrics(sl, cutoffs),
                                      flagged=sl.n_relevant == 0))

    keys = [metric_key(name, k) for name in METRIC_NAMES for k in cutoffs]
    n = len(per_query)
    means = {key: (float(np.mean([q.values[key] for q in per_query])) if n else 0.0) for key in keys}
    flagged = [q.qid for q in per_query if q.flagged]
    if flagged:
        logger.debug(f"{len(flagged)} of {n} queries have no relevant documents")
    return EvalReport(cutoffs=cutoffs, means=means, n_queries=n, flagged_qids=flagged, per_query=per_query)


def evaluate_all(scores, labels, cutoffs: Sequence[int] = tuple(settings.CUTOFFS),
                 qid: str = "0") -> EvalReport:
    """All four metric families at all cutoffs for one query."""
    return evaluate_queries([(qid, np.asarray(scores), np.asarray(labels))], cutoffs)


def average_reports(reports: List[EvalReport]) -> EvalReport:
    """Unweighted mean of fold reports (the cross-validation summary)."""
    if not reports:
        raise UsageError("no reports to average")
    keys = list(reports[0].means)
    means = {key: float(np.mean([r.means[key] for r in reports])) for key in keys}
    return EvalReport(
        cutoffs=reports[0].cutoffs,
        means=means,
        n_queries=sum(r.n_queries for r in reports),
        flagged_qids=[q for r in reports for q in r.flagged_qids],
        per_query=[q for r in reports for q in r.per_query],
    )


def mean_ndcg(scored: Iterable[Tuple[np.ndarray, np.ndarray]], k: int = settings.SELECTION_CUTOFF) -> float:
    """Mean nDCG@k; the model-selection criterion."""
    values = [ndcg_at_k(sort_by_scores(s, y), k) for s, y in scored]
    return float(np.mean(values)) if values else 0.0
