from pydantic import BaseModel, Field
from enum import Enum
from typing import List


class Activation(str, Enum):
    RELU = "relu"
    CELU = "celu"
    LINEAR = "linear"


class Mode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


class Architecture(str, Enum):
    R5 = "R5"
    CE5 = "CE5"
    R4L = "R4.L"
    CE4L = "CE4.L"

    @property
    def hidden_activation(self) -> Activation:
        return Activation.RELU if self in (Architecture.R5, Architecture.R4L) else Activation.CELU

    @property
    def output_activation(self) -> Activation:
        if self in (Architecture.R4L, Architecture.CE4L):
            return Activation.LINEAR
        return self.hidden_activation


class LayerSpec(BaseModel):
    in_dim: int = Field(..., ge=1)
    out_dim: int = Field(..., ge=1)
    activation: Activation
    batchnorm: bool = False


def architecture_layers(arch: Architecture, in_dim: int, hidden: int = 100,
                        num_layers: int = 5) -> List[LayerSpec]:
    """Layer specs for one of the four scorer architectures.

    Hidden layers carry batch normalization between the affine map and the
    activation; the output layer maps to a single score and is never normalized.
    """
    dims = [in_dim] + [hidden] * (num_layers - 1) + [1]
    layers = []
    for i in range(num_layers):
        last = i == num_layers - 1
        layers.append(LayerSpec(
            in_dim=dims[i],
            out_dim=dims[i + 1],
            activation=arch.output_activation if last else arch.hidden_activation,
            batchnorm=not last,
        ))
    return layers
