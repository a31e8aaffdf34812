from pydantic import BaseModel, Field, model_validator
from enum import Enum
from typing import Optional
import numpy as np

from rankforge.core.config import settings
from rankforge.models.base import ArrayModel


class GradientStrategy(str, Enum):
    TYPE1 = "type1"
    TYPE2 = "type2"
    TYPE3 = "type3"


class TwinSigmoidSpec(BaseModel):
    """Twin-sigmoid settings.

    The forward pass is the hard step (steepness conceptually infinite); only
    the backward steepness ``alpha_b`` is a runtime parameter.
    """

    alpha_b: float = Field(settings.ALPHA_B, gt=0.0)
    strategy: GradientStrategy = GradientStrategy.TYPE1
    tie_seed: int = 0
    break_ties: bool = True


class PairwiseState(ArrayModel):
    A: np.ndarray
    tie_mask: np.ndarray
    P_ddot: np.ndarray


class RankVector(ArrayModel):
    r: np.ndarray
    asc_perm: np.ndarray

    @property
    def size(self) -> int:
        return int(self.r.shape[0])


class LossFamily(str, Enum):
    PRE = "pre"
    AP = "ap"
    NDCG = "ndcg"
    NERR = "nerr"
    APPROX_NDCG = "approxndcg"
    LISTNET = "listnet"
    LISTMLE = "listmle"

    @property
    def is_metric(self) -> bool:
        return self in (LossFamily.PRE, LossFamily.AP, LossFamily.NDCG, LossFamily.NERR)


class LossSpec(BaseModel):
    family: LossFamily
    k: Optional[int] = Field(None, ge=1)
    strategy: Optional[GradientStrategy] = None
    alpha: float = Field(settings.APPROX_ALPHA, gt=0.0)
    twin: TwinSigmoidSpec = TwinSigmoidSpec()
    paper_exact_grad: bool = False

    @model_validator(mode="after")
    def _check_strategy(self):
        if self.family.is_metric and self.strategy is None:
            raise ValueError(f"{self.family.value} loss needs a gradient strategy")
        if not self.family.is_metric and self.strategy is not None:
            raise ValueError(f"{self.family.value} loss takes no gradient strategy")
        if self.family in (LossFamily.PRE, LossFamily.NERR) and self.k is None:
            raise ValueError(f"{self.family.value} loss needs a cutoff k")
        if self.strategy is not None and self.twin.strategy != self.strategy:
            self.twin = self.twin.model_copy(update={"strategy": self.strategy})
        return self

    @property
    def name(self) -> str:
        if not self.family.is_metric:
            return self.family.value
        head = self.family.value if self.k is None else f"{self.family.value}@{self.k}"
        return f"{head}.{self.strategy.value}"


class LossOutput(ArrayModel):
    """Loss value (negative metric) and its gradient w.r.t. the scores."""

    value: float
    grad: np.ndarray
    flagged: bool = False
