"""Operation-table completion with trace-product factor cubes.

A binary operation on ``n`` symbols is stored as a table and fit by the
model ``T[a, b, c] = (1/n) Tr[A_a B_b C_c]``.  Training uses a quartic
Gram-matrix regularizer that pulls the factors toward unitary group
representations.  Submodules:

``optable``      tables, axiom checks, train/test splits
``tensor``       factor cubes and the model contraction
``training``     losses, gradients, momentum descent, epsilon-scheduler
``diagnostics``  imbalance, unitarity, accuracy, spectra
``rep``          representation extraction, Fourier maps, convolution
``complexity``   H* estimation and generalization sweeps
``io``           versioned file formats
"""

__version__ = "0.1.0"

from .optable import DataSplit, OpTable, check_axioms, full_split, make_modular, make_symmetric, split_cells
from .tensor import ModelParams, eval_cell, eval_full, frobenius_sq, init_factors, regular_representation
from .training import TrainConfig, TrainResult, gradients, h_reg, l2_reg, masked_sq_loss, train

__all__ = [
    "__version__",
    "DataSplit", "OpTable", "check_axioms", "full_split", "make_modular", "make_symmetric", "split_cells",
    "ModelParams", "eval_cell", "eval_full", "frobenius_sq", "init_factors", "regular_representation",
    "TrainConfig", "TrainResult", "gradients", "h_reg", "l2_reg", "masked_sq_loss", "train",
]
