"""
Spectrum of the limiting covariance operator of the CvM goodness-of-fit
statistic and quantiles of the resulting weighted chi-square series.

The limit of W_n(sigma) = sqrt(n) |sigma|^-1 (T_n(sigma) - C0^S(sigma)) has
covariance rho(sigma, tau), so the CvM statistic converges to
sum_j lambda_j Z_j^2 with lambda_j the eigenvalues of
p_sigma^{1/2} rho(sigma, tau) p_tau^{1/2}.
"""

import logging

import numpy as np

from .pattern_space import SPACE
from ..copulas.base import CopulaModel
from ..copulas.estimators import rho_matrix
from ..utils.rng import replicate_rng
from ..utils.validators import ResourceError, RunValidator, ValidationError

logger = logging.getLogger(__name__)

MAX_SPECTRUM_LENGTH = 4
NEGATIVE_EIGENVALUE_TOLERANCE = -1e-8
SERIES_BATCH = 100_000


def spectrum_matrix(null_model: CopulaModel, k: int, reps: int, seed: int) -> np.ndarray:
    """Symmetric matrix p^{1/2} rho p^{1/2} over all patterns of length <= k."""
    if k > MAX_SPECTRUM_LENGTH:
        raise ResourceError(f"Limit spectra are supported up to k={MAX_SPECTRUM_LENGTH}, got k={k}")
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    rho = rho_matrix(null_model, k, reps, seed)
    rho = (rho + rho.T) / 2.0
    root_weights = np.sqrt(SPACE.weights(k))
    return root_weights[:, None] * rho * root_weights[None, :]


def limit_spectrum(null_model: CopulaModel, k: int, reps: int, seed: int) -> np.ndarray:
    """
    Eigenvalues of the limiting covariance operator, nonincreasing.

    Raises:
        ResourceError: For k > 4
    """
    eigenvalues = np.linalg.eigvalsh(spectrum_matrix(null_model, k, reps, seed))[::-1]
    negative = eigenvalues[eigenvalues < NEGATIVE_EIGENVALUE_TOLERANCE]
    if len(negative):
        logger.warning(f"{len(negative)} eigenvalue(s) below {NEGATIVE_EIGENVALUE_TOLERANCE} "
                       f"(smallest {negative.min():.3g}); increase reps")
    return eigenvalues


def chi_square_series_quantile(eigenvalues, alpha: float, reps: int, seed: int) -> float:
    """Monte Carlo upper-alpha quantile of sum_j lambda_j Z_j^2 (negative lambdas dropped)."""
    alpha = RunValidator.validate_alpha(alpha)
    weights = np.clip(np.asarray(eigenvalues, dtype=float), 0.0, None)
    weights = weights[weights > 0]
    if len(weights) == 0:
        return 0.0
    draws = []
    for batch, start in enumerate(range(0, reps, SERIES_BATCH)):
        rng = replicate_rng(seed, batch)
        normals = rng.standard_normal((min(SERIES_BATCH, reps - start), len(weights)))
        draws.append((normals ** 2) @ weights)
    return float(np.quantile(np.concatenate(draws), 1.0 - alpha))
