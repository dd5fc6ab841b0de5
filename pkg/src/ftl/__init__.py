"""Follow-the-leader: a from-scratch neural stack (grouped convolutions, MCN/RN),
the hierarchical tracking controller, and a 2-D kinematic simulator."""

from . import _malloc  # noqa: F401  (arena tuning; see module docstring)

__version__ = "0.1.0"

from .tensor import ConvSpec, DenseSpec, LstmSpec, Tensor, count_flops, count_params

__all__ = [
    "ConvSpec",
    "DenseSpec",
    "LstmSpec",
    "Tensor",
    "count_flops",
    "count_params",
    "__version__",
]
