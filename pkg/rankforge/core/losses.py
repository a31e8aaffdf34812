"""
Listwise ranking losses. Every loss returns ``LossOutput(value, grad)`` with
``value`` the negative metric and ``grad`` = dL/dscores.

The metric families (pre, ap, ndcg, nerr) use exact twin-sigmoid ranks in the
forward pass, so the value is the exact metric of the tie-broken ranking; the
gradient w.r.t. rank positions is chained to the scores by ``RankJacobian``.
Precision, AP and nERR are written over sorted positions r_bar = r[asc_perm];
nDCG is written over the original document indices.
"""

import re
import numpy as np
from pydantic import ValidationError
from typing import Optional

from rankforge.core.config import settings
from rankforge.core.exceptions import ConfigError, UsageError
from rankforge.core.logging import get_logger
from rankforge.core.metrics import dcg, err
from rankforge.core.ranking import RankJacobian, rank_minus, rank_plus
from rankforge.models.ranking import (
    GradientStrategy,
    LossFamily,
    LossOutput,
    LossSpec,
    TwinSigmoidSpec,
)

logger = get_logger(__name__)

LN2 = np.log(2.0)

_METRIC_LOSS = re.compile(r"^(pre|ap|ndcg|nerr)(?:@(\d+))?\.(type[123])$")


def _as_labels(labels, m: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (m,):
        raise UsageError(f"{m} scores for {labels.size} labels")
    return labels


def _flagged(m: int) -> LossOutput:
    return LossOutput(value=0.0, grad=np.zeros(m), flagged=True)


def _positions(m: int) -> np.ndarray:
    return np.arange(1, m + 1, dtype=np.float64)


def _suffix_sums(b: np.ndarray) -> np.ndarray:
    """S_i = sum_{j >= i} b_j / j over 1-based positions."""
    return np.cumsum((b / _positions(b.size))[::-1])[::-1]


def _stop_probabilities(y_ss: np.ndarray, max_grade: float) -> np.ndarray:
    """P_j = prod_{i<j} (1 - Pr_i) * Pr_j for the cascade model."""
    pr = (np.exp2(y_ss) - 1.0) / 2.0 ** max_grade
    not_stopped = np.concatenate(([1.0], np.cumprod(1.0 - pr)[:-1]))
    return not_stopped * pr


# ----- differentiable metric formulas on arbitrary rank vectors -----

def virtual_precision(r_bar, b_ss, k: int) -> float:
    """(1/k) sum_{i<=k} b_i * i / r_bar_i"""
    r_bar = np.asarray(r_bar, dtype=np.float64)
    b_ss = np.asarray(b_ss, dtype=np.float64)
    return float((b_ss[:k] * _positions(r_bar.size)[:k] / r_bar[:k]).sum()) / k


def virtual_ap(r_bar, b_ss) -> float:
    """(1/|Y+|) sum_i b_i * (i / r_bar_i) * sum_{j>=i} b_j / j"""
    r_bar = np.asarray(r_bar, dtype=np.float64)
    b_ss = np.asarray(b_ss, dtype=np.float64)
    n_rel = b_ss.sum()
    if n_rel == 0:
        return 0.0
    return float((b_ss * _positions(r_bar.size) / r_bar * _suffix_sums(b_ss)).sum()) / n_rel


def virtual_ndcg(r, labels) -> float:
    """(1/DCG*) sum_k (2^y_k - 1) / log2(r_k + 1), over original indices."""
    r = np.asarray(r, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    ideal = dcg(np.sort(labels)[::-1], labels.size)
    if ideal == 0.0:
        return 0.0
    return float(((np.exp2(labels) - 1.0) / np.log2(r + 1.0)).sum()) / ideal


def virtual_nerr(r_bar, y_ss, k: int) -> float:
    """(1/ERR*@k) sum_{j<=k} P_j / r_bar_j"""
    r_bar = np.asarray(r_bar, dtype=np.float64)
    y_ss = np.asarray(y_ss, dtype=np.float64)
    max_grade = y_ss.max()
    if max_grade == 0:
        return 0.0
    ideal = err(np.sort(y_ss)[::-1], k, int(max_grade))
    return float((_stop_probabilities(y_ss, max_grade)[:k] / r_bar[:k]).sum()) / ideal


# ----- twin-sigmoid metric losses -----

def _chain(y, labels, twin: TwinSigmoidSpec, asc_perm: np.ndarray, dL_drbar: np.ndarray) -> np.ndarray:
    """Route a sorted-position gradient back to documents, then through the ranks."""
    dL_dr = np.zeros(dL_drbar.size)
    dL_dr[asc_perm] = dL_drbar
    return RankJacobian(y, twin, labels).vjp(dL_dr)


def _precision_loss(y: np.ndarray, labels: np.ndarray, k: int, twin: TwinSigmoidSpec,
                    tie_counter: int) -> LossOutput:
    # sum stops at min(k, m); the divisor stays k, as in precision_at_k
    m = y.size
    rv = rank_plus(y, twin, tie_counter)
    b_ss = (labels[rv.asc_perm] > 0).astype(np.float64)
    if b_ss.sum() == 0:
        return _flagged(m)
    r_bar = rv.r[rv.asc_perm]
    top = min(k, m)

    value = -virtual_precision(r_bar, b_ss, k)
    dL_drbar = np.zeros(m)
    # d(-Pre)/dr_bar_i = b_i * i / (k * r_bar_i^2)
    dL_drbar[:top] = b_ss[:top] * _positions(m)[:top] / (k * r_bar[:top] ** 2)
    return LossOutput(value=value, grad=_chain(y, labels, twin, rv.asc_perm, dL_drbar))


def diff_precision_loss(y, labels, k: int, twin: TwinSigmoidSpec = TwinSigmoidSpec(),
                        tie_counter: int = 0) -> LossOutput:
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    labels = _as_labels(labels, m)
    if not 1 <= k <= m:
        raise UsageError(f"precision cutoff k={k} outside 1..{m}")
    return _precision_loss(y, labels, k, twin, tie_counter)


def diff_ap_loss(y, labels, twin: TwinSigmoidSpec = TwinSigmoidSpec(),
                 tie_counter: int = 0) -> LossOutput:
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    labels = _as_labels(labels, m)

    rv = rank_plus(y, twin, tie_counter)
    b_ss = (labels[rv.asc_perm] > 0).astype(np.float64)
    n_rel = b_ss.sum()
    if n_rel == 0:
        return _flagged(m)
    r_bar = rv.r[rv.asc_perm]

    value = -virtual_ap(r_bar, b_ss)
    dL_drbar = b_ss * _positions(m) * _suffix_sums(b_ss) / (n_rel * r_bar ** 2)
    return LossOutput(value=value, grad=_chain(y, labels, twin, rv.asc_perm, dL_drbar))


def _ndcg_rank_gradient(r: np.ndarray, labels: np.ndarray, ideal: float,
                        paper_exact_grad: bool) -> np.ndarray:
    """d(-nDCG)/dr_k = G_k / (DCG* * log2(r_k+1)^2 * (r_k+1) * ln2)"""
    log_term = np.log2(r + 1.0)
    grad = (np.exp2(labels) - 1.0) / (ideal * log_term ** 2 * (r + 1.0))
    return grad if paper_exact_grad else grad / LN2


def diff_ndcg_loss(y, labels, twin: TwinSigmoidSpec = TwinSigmoidSpec(),
                   tie_counter: int = 0, paper_exact_grad: bool = False) -> LossOutput:
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    labels = _as_labels(labels, m)
    ideal = dcg(np.sort(labels)[::-1], m)
    if ideal == 0.0:
        return _flagged(m)

    rv = rank_plus(y, twin, tie_counter)
    value = -virtual_ndcg(rv.r, labels)
    dL_dr = _ndcg_rank_gradient(rv.r, labels, ideal, paper_exact_grad)
    return LossOutput(value=value, grad=RankJacobian(y, twin, labels).vjp(dL_dr))


def diff_nerr_loss(y, labels, k: int, twin: TwinSigmoidSpec = TwinSigmoidSpec(),
                   tie_counter: int = 0) -> LossOutput:
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    labels = _as_labels(labels, m)
    if k < 1:
        raise UsageError(f"nERR cutoff must be >= 1, got {k}")
    max_grade = labels.max()
    if max_grade == 0:
        return _flagged(m)

    rv = rank_plus(y, twin, tie_counter)
    y_ss = labels[rv.asc_perm]
    r_bar = rv.r[rv.asc_perm]
    ideal = err(np.sort(y_ss)[::-1], k, int(max_grade))

    value = -virtual_nerr(r_bar, y_ss, k)
    P = _stop_probabilities(y_ss, max_grade)
    dL_drbar = np.zeros(m)
    dL_drbar[:k] = P[:k] / (ideal * r_bar[:k] ** 2)
    return LossOutput(value=value, grad=_chain(y, labels, twin, rv.asc_perm, dL_drbar))


# ----- baselines -----

def approx_ndcg_loss(y, labels, alpha: float = settings.APPROX_ALPHA) -> LossOutput:
    """nDCG over smooth sigmoid ranks; the gradient is the exact derivative."""
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    labels = _as_labels(labels, m)
    ideal = dcg(np.sort(labels)[::-1], m)
    if ideal == 0.0:
        return _flagged(m)

    r = rank_minus(y, alpha)
    value = -virtual_ndcg(r, labels)
    dL_dr = _ndcg_rank_gradient(r, labels, ideal, paper_exact_grad=False)
    soft = TwinSigmoidSpec(alpha_b=alpha, strategy=GradientStrategy.TYPE1)
    return LossOutput(value=value, grad=RankJacobian(y, soft).vjp(dL_dr))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    return z - np.logaddexp.reduce(z)


def listnet_top1_loss(y, labels) -> LossOutput:
    """Cross-entropy between top-1 probabilities softmax(labels) and softmax(y)."""
    y = np.asarray(y, dtype=np.float64)
    labels = _as_labels(labels, y.size)
    if not np.any(labels > 0):
        return _flagged(y.size)
    target = np.exp(_log_softmax(labels))
    log_q = _log_softmax(y)
    value = float(-(target * log_q).sum())
    return LossOutput(value=value, grad=np.exp(log_q) - target)


def listmle_loss(y, labels, tie_seed: int = 0, tie_counter: int = 0) -> LossOutput:
    """Plackett-Luce negative log-likelihood of the label-sorted permutation.

    Documents with equal labels are shuffled with a generator seeded by
    (tie_seed, tie_counter).
    """
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    labels = _as_labels(labels, m)
    if not np.any(labels > 0):
        return _flagged(m)

    shuffled = np.random.default_rng([tie_seed, tie_counter]).permutation(m)
    order = shuffled[np.argsort(-labels[shuffled], kind="stable")]
    s = y[order]
    # lse_i = log sum_{j >= i} exp(s_j)
    lse = np.logaddexp.accumulate(s[::-1])[::-1]
    value = float((lse - s).sum())
    # d/ds_k = -1 + sum_{i <= k} exp(s_k - lse_i)
    grad_s = -1.0 + np.exp(s + np.logaddexp.accumulate(-lse))
    grad = np.zeros(m)
    grad[order] = grad_s
    return LossOutput(value=value, grad=grad)


# ----- selection -----

def parse_loss_spec(text: str, alpha_b: float = settings.ALPHA_B,
                    alpha: float = settings.APPROX_ALPHA, tie_seed: int = 0,
                    paper_exact_grad: bool = False) -> LossSpec:
    """Parse a loss name: ``pre@k.typeN``, ``ap.typeN``, ``ndcg.typeN``,
    ``nerr@k.typeN``, ``approxndcg``, ``listnet`` or ``listmle``."""
    text = text.strip().lower()
    try:
        if text in (LossFamily.APPROX_NDCG.value, LossFamily.LISTNET.value, LossFamily.LISTMLE.value):
            return LossSpec(family=LossFamily(text), alpha=alpha,
                            twin=TwinSigmoidSpec(alpha_b=alpha_b, tie_seed=tie_seed))

        match = _METRIC_LOSS.match(text)
        if match is None:
            raise ConfigError(f"unknown loss '{text}'")
        family = LossFamily(match.group(1))
        k: Optional[int] = int(match.group(2)) if match.group(2) else None
        if family in (LossFamily.AP, LossFamily.NDCG) and k is not None:
            raise ConfigError(f"{family.value} loss is defined over the full list; drop '@{k}'")
        if family == LossFamily.PRE and k is None:
            k = settings.DEFAULT_PRE_K
        if family == LossFamily.NERR and k is None:
            k = settings.DEFAULT_NERR_K
        strategy = GradientStrategy(match.group(3))
        return LossSpec(
            family=family,
            k=k,
            strategy=strategy,
            alpha=alpha,
            twin=TwinSigmoidSpec(alpha_b=alpha_b, strategy=strategy, tie_seed=tie_seed),
            paper_exact_grad=paper_exact_grad,
        )
    except ValidationError as e:
        raise ConfigError(f"invalid loss '{text}': {e}") from e


def compute_loss(spec: LossSpec, y, labels, tie_counter: int = 0) -> LossOutput:
    """Evaluate ``spec`` on one query. A precision cutoff beyond the list
    length scores the missing positions as non-relevant."""
    family = spec.family
    if family == LossFamily.PRE:
        y = np.asarray(y, dtype=np.float64)
        return _precision_loss(y, _as_labels(labels, y.size), spec.k, spec.twin, tie_counter)
    if family == LossFamily.AP:
        return diff_ap_loss(y, labels, spec.twin, tie_counter)
    if family == LossFamily.NDCG:
        return diff_ndcg_loss(y, labels, spec.twin, tie_counter, spec.paper_exact_grad)
    if family == LossFamily.NERR:
        return diff_nerr_loss(y, labels, spec.k, spec.twin, tie_counter)
    if family == LossFamily.APPROX_NDCG:
        return approx_ndcg_loss(y, labels, spec.alpha)
    if family == LossFamily.LISTNET:
        return listnet_top1_loss(y, labels)
    return listmle_loss(y, labels, spec.twin.tie_seed, tie_counter)
