import numpy as np
from pydantic import BaseModel
from typing import List, Sequence

from rankforge.core.data import generate_uniform_vectors
from rankforge.core.logging import get_logger
from rankforge.core.ranking import approx_bound_check, bound_holds, l1_rank_loss, rank_minus, rank_plus, true_ranks
from rankforge.models.dataset import SyntheticSpec
from rankforge.models.ranking import TwinSigmoidSpec
from rankforge.models.reports import RankExperimentRow

logger = get_logger(__name__)

DEFAULT_ALPHAS = (1.0, 10.0, 100.0, 1000.0, 10000.0, 100000.0)

PI_MINUS = "pi_minus"
PI_PLUS = "pi_plus"
PI_PLUS_TIE_BREAKING = "pi_plus_tie_breaking"


class BoundViolation(BaseModel):
    vector: int
    alpha: float
    lhs: float
    rhs: float


class BoundSweep(BaseModel):
    checked: int
    violations: List[BoundViolation] = []


class ExperimentService:
    """Synthetic experiments on rank derivation accuracy."""

    def rank_accuracy_experiment(self, spec: SyntheticSpec,
                                 alphas: Sequence[float] = DEFAULT_ALPHAS) -> List[RankExperimentRow]:
        """Mean L1 distance to the true ranks over ``spec.v1`` uniform vectors.

        One row per alpha for the sigmoid approximation, then one row each
        for exact ranks without and with tie breaking.
        """
        vectors = generate_uniform_vectors(spec)
        truth = [true_ranks(v) for v in vectors]

        def mean_l1(ranker) -> float:
            return float(np.mean([l1_rank_loss(ranker(i, v), t) for i, (v, t) in enumerate(zip(vectors, truth))]))

        rows = []
        for alpha in alphas:
            value = mean_l1(lambda i, v: rank_minus(v, alpha))
            rows.append(RankExperimentRow(method=PI_MINUS, alpha=alpha, v1=spec.v1, v2=spec.v2, mean_L1=value))
            logger.info(f"{PI_MINUS} alpha={alpha:g} ({spec.v1}, {spec.v2}): {value:.4f}")

        for method, break_ties in ((PI_PLUS, False), (PI_PLUS_TIE_BREAKING, True)):
            twin = TwinSigmoidSpec(tie_seed=spec.seed, break_ties=break_ties)
            value = mean_l1(lambda i, v: rank_plus(v, twin, tie_counter=i).r)
            rows.append(RankExperimentRow(method=method, alpha=float("nan"), v1=spec.v1, v2=spec.v2, mean_L1=value))
            logger.info(f"{method} ({spec.v1}, {spec.v2}): {value:.4f}")
        return rows

    def bound_sweep(self, n_vectors: int, max_m: int, alphas: Sequence[float], seed: int = 0) -> BoundSweep:
        """Check the sigmoid-rank error bound elementwise on random distinct-score vectors.

        Violations are recorded, not raised.
        """
        rng = np.random.default_rng(seed)
        violations: List[BoundViolation] = []
        checked = 0
        for n in range(n_vectors):
            m = int(rng.integers(2, max_m + 1))
            y = rng.normal(size=m)
            if np.unique(y).size < m:
                continue
            for alpha in alphas:
                lhs, rhs = approx_bound_check(y, alpha)
                checked += 1
                if not bound_holds(lhs, rhs):
                    violations.append(BoundViolation(vector=n, alpha=alpha, lhs=lhs, rhs=rhs))
        if violations:
            logger.warning(f"{len(violations)} of {checked} bound checks failed")
        return BoundSweep(checked=checked, violations=violations)
