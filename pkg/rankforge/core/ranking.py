"""
Rank positions from scores.

``rank_plus`` derives exact ranks with the twin sigmoid: the forward pass is
the hard step, ties are resolved by a random permutation, and the backward
pass is the derivative of a soft sigmoid with steepness ``alpha_b``
(``RankJacobian``). ``rank_minus`` is the smooth sigmoid approximation.

With ``y_ij = y_i - y_j``:

    r_i       = 1 + sum_{j != i} (1 - sigma(y_ij))
    dr_i/dy_i = -sum_{j != i} g_ij
    dr_i/dy_j = g_ij
"""

import numpy as np
from typing import Iterator, Tuple

from rankforge.core.config import settings
from rankforge.core.exceptions import NumericError, UsageError
from rankforge.models.ranking import GradientStrategy, PairwiseState, RankVector, TwinSigmoidSpec


def sigmoid(z):
    """Logistic function, accurate in both tails."""
    return np.exp(-np.logaddexp(0.0, -z))


def _row_blocks(m: int, block: int = settings.PAIRWISE_BLOCK) -> Iterator[Tuple[int, int]]:
    for start in range(0, m, block):
        yield start, min(start + block, m)


def _check_scores(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 1:
        raise UsageError(f"expected a non-empty score vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise NumericError("non-finite score")
    return y


def tie_permutation(m: int, tie_seed: int, tie_counter: int = 0) -> np.ndarray:
    """Random permutation of 1..m used to break score ties."""
    return np.random.default_rng([tie_seed, tie_counter]).permutation(m) + 1


def pairwise_state(y, p: np.ndarray) -> PairwiseState:
    """Full m x m pairwise view; for inspection and small lists."""
    y = _check_scores(y)
    A = y[:, None] - y[None, :]
    tie_mask = A == 0
    np.fill_diagonal(tie_mask, False)
    P_ddot = (p[:, None] - p[None, :] > 0).astype(np.int64)
    return PairwiseState(A=A, tie_mask=tie_mask, P_ddot=P_ddot)


def true_ranks(y) -> np.ndarray:
    """1-based positions of a descending sort (ties by ascending index)."""
    y = np.asarray(y, dtype=np.float64)
    ranks = np.empty(y.size)
    ranks[np.argsort(-y, kind="stable")] = np.arange(1, y.size + 1)
    return ranks


def rank_plus(y, spec: TwinSigmoidSpec = TwinSigmoidSpec(), tie_counter: int = 0) -> RankVector:
    """Exact ranks through the hard-step forward of the twin sigmoid.

    With tie breaking the result is a permutation of 1..m; a tied pair
    (i, j) puts i first when p_i > p_j. Without it a tie contributes 0.5.
    """
    y = _check_scores(y)
    m = y.size
    p = tie_permutation(m, spec.tie_seed, tie_counter) if spec.break_ties else None

    r = np.ones(m)
    for s, e in _row_blocks(m):
        A = y[s:e, None] - y[None, :]
        ties = A == 0
        ties[np.arange(e - s), np.arange(s, e)] = False
        # 1 - sigma(y_ij): 1 when j outscores i
        below = (A < 0).astype(np.float64)
        if p is not None:
            below += ties * (p[s:e, None] < p[None, :])
        else:
            below += 0.5 * ties
        r[s:e] += below.sum(axis=1)

    return RankVector(r=r, asc_perm=np.argsort(r, kind="stable"))


def rank_minus(y, alpha: float) -> np.ndarray:
    """Smooth ranks: 1 + sum_{j != i} 1 / (1 + exp(alpha * y_ij))."""
    if alpha <= 0:
        raise UsageError(f"alpha must be positive, got {alpha}")
    y = np.asarray(y, dtype=np.float64)
    m = y.size
    r = np.ones(m)
    for s, e in _row_blocks(m):
        S = sigmoid(-alpha * (y[s:e, None] - y[None, :]))
        S[np.arange(e - s), np.arange(s, e)] = 0.0
        r[s:e] += S.sum(axis=1)
    return r


def sigma_backward(y_ij, u_ij, spec: TwinSigmoidSpec):
    """Backward derivative of the twin sigmoid under the chosen strategy."""
    z = np.asarray(y_ij, dtype=np.float64)
    u = np.asarray(u_ij)
    if not np.all(np.isin(u, (-1, 0, 1))):
        raise UsageError("u_ij must be -1, 0 or 1")
    a = spec.alpha_b
    pos = sigmoid(a * z)
    neg = sigmoid(-a * z)  # 1 - sigma_b(z), without cancellation

    if spec.strategy == GradientStrategy.TYPE1:
        out = a * pos * neg * np.ones_like(u, dtype=np.float64)
    elif spec.strategy == GradientStrategy.TYPE2:
        out = u * (a * pos * neg)
    else:
        out = np.where(u == 1, 2.0 * a * neg, np.where(u == -1, -2.0 * a * pos, 0.0))
    return out if out.ndim else float(out)


class RankJacobian:
    """Backward of ``rank_plus``: per-pair derivatives g_ij and their chain.

    Blocks of rows are formed on demand so memory stays O(block * m).
    """

    def __init__(self, y, spec: TwinSigmoidSpec, labels=None,
                 block: int = settings.PAIRWISE_BLOCK):
        needs_labels = spec.strategy in (GradientStrategy.TYPE2, GradientStrategy.TYPE3)
        if needs_labels and labels is None:
            raise UsageError(f"{spec.strategy.value} gradients need ground-truth labels")
        self.y = _check_scores(y)
        self.labels = None if labels is None else np.asarray(labels, dtype=np.float64)
        if self.labels is not None and self.labels.shape != self.y.shape:
            raise UsageError(f"{self.y.size} scores for {self.labels.size} labels")
        self.spec = spec
        self.block = block

    @property
    def size(self) -> int:
        return int(self.y.size)

    def _u(self, s: int, e: int) -> np.ndarray:
        if self.labels is None or self.spec.strategy == GradientStrategy.TYPE1:
            return np.zeros((e - s, self.size), dtype=np.int64)
        return np.sign(self.labels[s:e, None] - self.labels[None, :]).astype(np.int64)

    def _block(self, s: int, e: int) -> np.ndarray:
        G = sigma_backward(self.y[s:e, None] - self.y[None, :], self._u(s, e), self.spec)
        G[np.arange(e - s), np.arange(s, e)] = 0.0
        return G

    def pair(self, i: int, j: int) -> float:
        """g_ij: the derivative of r_i w.r.t. y_j for i != j."""
        if i == j:
            return 0.0
        return float(self._block(i, i + 1)[0, j])

    def matrix(self) -> np.ndarray:
        """All g_ij (zero diagonal)."""
        return np.vstack([self._block(s, e) for s, e in _row_blocks(self.size, self.block)])

    def dense(self) -> np.ndarray:
        """J[i, l] = dr_i / dy_l."""
        G = self.matrix()
        J = G.copy()
        J[np.diag_indices(self.size)] = -G.sum(axis=1)
        return J

    def vjp(self, dL_dr) -> np.ndarray:
        """dL/dy given dL/dr (both over original document indices)."""
        dL_dr = np.asarray(dL_dr, dtype=np.float64)
        out = np.zeros(self.size)
        for s, e in _row_blocks(self.size, self.block):
            G = self._block(s, e)
            out[s:e] -= dL_dr[s:e] * G.sum(axis=1)
            out += G.T @ dL_dr[s:e]
        return out


def rank_score_gradients(y, labels=None, spec: TwinSigmoidSpec = TwinSigmoidSpec()) -> RankJacobian:
    return RankJacobian(y, spec, labels)


def l1_rank_loss(pred_ranks, true_ranks_) -> float:
    pred_ranks = np.asarray(pred_ranks, dtype=np.float64)
    true_ranks_ = np.asarray(true_ranks_, dtype=np.float64)
    if pred_ranks.shape != true_ranks_.shape:
        raise UsageError("rank vectors differ in length")
    return float(np.abs(pred_ranks - true_ranks_).sum())


def approx_bound_check(y, alpha: float) -> Tuple[float, float]:
    """(max_i |rank_minus(y)_i - true_i|, (m - 1) / (exp(delta * alpha) + 1)).

    ``delta`` is the smallest gap between two scores. The left side is summed
    from per-pair deviations, each sign(y_ij) / (1 + exp(alpha * |y_ij|)).
    """
    y = _check_scores(y)
    m = y.size
    if m == 1:
        return 0.0, 0.0
    delta = float(np.diff(np.sort(y)).min())
    if delta == 0.0:
        raise UsageError("approximation bound needs distinct scores")

    lhs = 0.0
    for s, e in _row_blocks(m):
        A = y[s:e, None] - y[None, :]
        D = np.sign(A) * sigmoid(-alpha * np.abs(A))
        D[np.arange(e - s), np.arange(s, e)] = 0.0
        lhs = max(lhs, float(np.abs(D.sum(axis=1)).max()))
    rhs = (m - 1) * float(sigmoid(-alpha * delta))
    return lhs, rhs


def bound_holds(lhs: float, rhs: float, rtol: float = 1e-12) -> bool:
    """lhs <= rhs up to floating-point slack."""
    return lhs <= rhs * (1.0 + rtol) + 1e-300
