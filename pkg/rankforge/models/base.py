from pydantic import BaseModel, ConfigDict
from typing import Any
import numpy as np


def as_float_array(value: Any, ndim: int) -> np.ndarray:
    """Coerce to a contiguous float64 array of the given rank."""
    arr = np.ascontiguousarray(np.asarray(value, dtype=np.float64))
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    return arr


class ArrayModel(BaseModel):
    """Base for domain types that carry numpy arrays."""

    model_config = ConfigDict(
        arbitrary_types_allowed=True,
        validate_assignment=False,
        frozen=False,
    )
