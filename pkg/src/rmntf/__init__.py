"""Robust manifold nonnegative Tucker factorization."""

from .evaluation import accuracy, kmeans, nmi
from .graph import AffinityGraph, build_affinity, laplacian, regularizer_value
from .noise import NoiseSpec, add_laplace, add_salt_pepper
from .robust_loss import RobustLoss, ScaleState, loss_value, resolve_scale, weight_map
from .solver import (
    FitReport,
    NumericalError,
    SolverConfig,
    TuckerModel,
    augmented_objective,
    fit,
    initialize,
    project_new_sample,
    reconstruct,
)

__version__ = "0.1.0"
