"""Dense float64 numerics with tape-based reverse-mode differentiation."""

from . import kernels, ops
from .gradcheck import check_gradients, numeric_grad, relative_error
from .optim import AdamHyper, adam_step, init_moments
from .rng import SeededRng
from .tape import Tape, Var, backward, record_forward

__all__ = [
    "AdamHyper",
    "SeededRng",
    "Tape",
    "Var",
    "adam_step",
    "backward",
    "check_gradients",
    "init_moments",
    "kernels",
    "numeric_grad",
    "ops",
    "record_forward",
    "relative_error",
]
