"""Minimal differentiable-MLP machinery: tape autodiff, stacks, Adam, heads."""

from .autodiff import Tape, Var, backward
from .adam import AdamState, adam_step
from .mlp import Mlp, mlp_forward, save_mlp, load_mlp
from .heads import (
    squashed_gaussian_sample,
    squashed_gaussian_sample_np,
    gaussian_nll,
    gaussian_nll_np,
)

__all__ = [
    "Tape", "Var", "backward", "AdamState", "adam_step",
    "Mlp", "mlp_forward", "save_mlp", "load_mlp",
    "squashed_gaussian_sample", "squashed_gaussian_sample_np",
    "gaussian_nll", "gaussian_nll_np",
]
