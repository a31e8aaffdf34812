from pydantic import BaseModel, Field
from typing import Dict, List, Tuple

METRIC_NAMES: Tuple[str, ...] = ("precision", "map", "ndcg", "nerr")


class QueryMetrics(BaseModel):
    """Per-query metric values, kept for external significance testing."""

    qid: str
    values: Dict[str, float]  # "ndcg@5" -> value
    flagged: bool = False


class EvalReport(BaseModel):
    cutoffs: List[int]
    means: Dict[str, float]  # "ndcg@5" -> mean over queries
    n_queries: int = Field(..., ge=0)
    flagged_qids: List[str] = []
    per_query: List[QueryMetrics] = []

    def mean(self, metric: str, k: int) -> float:
        return self.means[metric_key(metric, k)]


class EpochRecord(BaseModel):
    epoch: int = Field(..., ge=1)
    train_loss: float
    train_ndcg: float = Field(..., ge=0.0, le=1.0)
    val_ndcg: float = Field(..., ge=0.0, le=1.0)
    test_ndcg: float = Field(..., ge=0.0, le=1.0)
    seconds: float = Field(..., ge=0.0)


class RankExperimentRow(BaseModel):
    method: str
    alpha: float
    v1: int
    v2: int
    mean_L1: float


def metric_key(metric: str, k: int) -> str:
    return f"{metric}@{k}"
