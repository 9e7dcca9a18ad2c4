"""protoseg: desk-scale semantic segmentation with a hybrid CNN +
transformer model whose decoder queries are learnable class prototypes.

Built on an in-package reverse-mode autodiff tensor engine with
compiled hot kernels (pure numpy fallback selected at import).
"""

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    NumericalError,
    ProtosegError,
    TapeError,
    UndefinedMetricError,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .tensor import Tape, Tensor, backward, tensor

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DimensionError",
    "KERNEL_BACKEND",
    "NumericalError",
    "ProtosegError",
    "Tape",
    "TapeError",
    "Tensor",
    "UndefinedMetricError",
    "backward",
    "tensor",
    "__version__",
]
