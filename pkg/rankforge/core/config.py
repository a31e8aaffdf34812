from pydantic_settings import BaseSettings
from typing import List, Optional


class Settings(BaseSettings):
    # Training protocol
    EPOCHS: int = 100
    LEARNING_RATE: float = 1e-3
    L2_RATE: float = 1e-3
    ACCUMULATE: int = 1
    INIT_SEED: int = 0

    # Twin-sigmoid / ApproxNDCG
    ALPHA_B: float = 1.0
    APPROX_ALPHA: float = 10.0
    DEFAULT_PRE_K: int = 10
    DEFAULT_NERR_K: int = 10
    PAIRWISE_BLOCK: int = 512

    # Network
    NUM_LAYERS: int = 5
    HIDDEN_WIDTH: int = 100
    BN_MOMENTUM: float = 0.1
    BN_EPS: float = 1e-5
    CELU_ALPHA: float = 1.0

    # Adam
    ADAM_BETA1: float = 0.9
    ADAM_BETA2: float = 0.999
    ADAM_EPS: float = 1e-8

    # Evaluation
    CUTOFFS: List[int] = [1, 3, 5, 10, 20]
    SELECTION_CUTOFF: int = 5
    NUM_FOLDS: int = 5
    GRADE_MAX: int = 4

    # Output
    OUTPUT_DIR: str = "runs"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    model_config = {
        "env_file": ".env",
        "env_prefix": "RANKFORGE_",
        "case_sensitive": True,
        "extra": "ignore",
    }


settings = Settings()
