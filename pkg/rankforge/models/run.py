from pydantic import BaseModel, Field, field_validator, model_validator
from typing import List, Optional

from rankforge.core.config import settings
from rankforge.models.network import Architecture


class RunConfig(BaseModel):
    """Everything that determines a training run."""

    data: List[str] = []
    folds_seed: int = 0
    fold: int = Field(1, ge=1)
    folds: int = Field(settings.NUM_FOLDS, ge=3)
    arch: Architecture = Architecture.R4L
    loss: str = "ndcg.type3"
    epochs: int = Field(settings.EPOCHS, ge=1)
    lr: float = Field(settings.LEARNING_RATE, gt=0.0)
    l2: float = Field(settings.L2_RATE, ge=0.0)
    alpha_b: float = Field(settings.ALPHA_B, gt=0.0)
    alpha: float = Field(settings.APPROX_ALPHA, gt=0.0)
    seed: int = settings.INIT_SEED
    out: Optional[str] = None
    cutoffs: List[int] = list(settings.CUTOFFS)
    paper_exact_grad: bool = False
    normalize: bool = True
    accumulate: int = Field(settings.ACCUMULATE, ge=1)
    hidden: int = Field(settings.HIDDEN_WIDTH, ge=1)
    jobs: int = Field(1, ge=1)

    @field_validator("cutoffs")
    @classmethod
    def _check_cutoffs(cls, v):
        if not v:
            raise ValueError("at least one cutoff is required")
        if any(k < 1 for k in v):
            raise ValueError("cutoffs must be >= 1")
        return v

    @field_validator("loss")
    @classmethod
    def _check_loss(cls, v):
        # Imported here: losses imports the models package
        from rankforge.core.losses import parse_loss_spec
        parse_loss_spec(v)
        return v

    @model_validator(mode="after")
    def _check_fold(self):
        if self.fold > self.folds:
            raise ValueError(f"fold {self.fold} does not exist with {self.folds} folds")
        return self
