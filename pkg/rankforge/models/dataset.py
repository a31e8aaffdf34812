from pydantic import BaseModel, Field, field_validator, model_validator
from typing import List
import numpy as np

from rankforge.models.base import ArrayModel, as_float_array


class QueryGroup(ArrayModel):
    """One query's documents: feature matrix (m x d) and graded labels."""

    qid: str
    features: np.ndarray
    labels: np.ndarray

    @field_validator("features", mode="before")
    @classmethod
    def _coerce_features(cls, v):
        return as_float_array(v, 2)

    @field_validator("labels", mode="before")
    @classmethod
    def _coerce_labels(cls, v):
        arr = np.asarray(v)
        if arr.ndim != 1:
            raise ValueError(f"labels must be 1-d, got shape {arr.shape}")
        if arr.size and not np.all(arr == np.round(arr)):
            raise ValueError("labels must be integer grades")
        return arr.astype(np.int64)

    @model_validator(mode="after")
    def _check_shapes(self):
        m = self.features.shape[0]
        if m < 1:
            raise ValueError(f"query {self.qid} has no documents")
        if self.labels.shape[0] != m:
            raise ValueError(f"query {self.qid}: {self.labels.shape[0]} labels for {m} documents")
        if np.any(self.labels < 0):
            raise ValueError(f"query {self.qid}: negative label")
        if not np.all(np.isfinite(self.features)):
            raise ValueError(f"query {self.qid}: non-finite feature value")
        return self

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, QueryGroup):
            return NotImplemented
        return (self.qid == other.qid
                and self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))


class Dataset(ArrayModel):
    groups: List[QueryGroup] = []
    dim: int = Field(0, ge=0)
    grade_max: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check_groups(self):
        seen = set()
        for g in self.groups:
            if g.features.shape[1] != self.dim:
                raise ValueError(f"query {g.qid} has {g.features.shape[1]} features, dataset has {self.dim}")
            if g.labels.size and int(g.labels.max()) > self.grade_max:
                raise ValueError(f"query {g.qid}: label above grade_max={self.grade_max}")
            if g.qid in seen:
                raise ValueError(f"duplicate qid {g.qid}")
            seen.add(g.qid)
        return self

    def __len__(self) -> int:
        return len(self.groups)

    def subset(self, indices) -> "Dataset":
        return Dataset(groups=[self.groups[i] for i in indices], dim=self.dim, grade_max=self.grade_max)


class FoldSplit(BaseModel):
    fold_index: int = Field(..., ge=1)
    train: List[int]
    validation: List[int]
    test: List[int]

    @model_validator(mode="after")
    def _check_disjoint(self):
        a, b, c = set(self.train), set(self.validation), set(self.test)
        if a & b or a & c or b & c:
            raise ValueError(f"fold {self.fold_index}: train/validation/test overlap")
        return self


class SyntheticSpec(BaseModel):
    v1: int = Field(..., ge=1)
    v2: int = Field(..., ge=1)
    seed: int = 0
