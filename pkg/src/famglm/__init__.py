"""Latent matrix factor GLMs for matrix-valued (image) predictors."""
from .dataset import Dataset
from .factor import (
    FactorLoadings,
    estimate_loadings,
    extract_scores,
    fit_loadings,
    moment_matrices,
    reconstruct,
    reconstruction_error,
    select_ranks,
)
from .glm import GlmFit, classify, fit_glm, predict
from .linalg import EigenResult, cholesky, sym_eigen, vec
from .model import FamGLM, VecGLM

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "EigenResult",
    "FactorLoadings",
    "FamGLM",
    "GlmFit",
    "VecGLM",
    "cholesky",
    "classify",
    "estimate_loadings",
    "extract_scores",
    "fit_glm",
    "fit_loadings",
    "moment_matrices",
    "predict",
    "reconstruct",
    "reconstruction_error",
    "select_ranks",
    "sym_eigen",
    "vec",
]
