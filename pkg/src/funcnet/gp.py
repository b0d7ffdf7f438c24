"""Matern covariance (smoothness 5/2) and Gaussian-process curve sampling.

The smoothness parameter is pinned at 5/2, which admits a closed form
without Bessel evaluations:

    C(d) = sigma2 * (1 + sqrt(5) d / rho + 5 d^2 / (3 rho^2)) * exp(-sqrt(5) d / rho)

with d = |t - s|.  Covariance matrices built from it on dense grids are
numerically near-singular, so the Cholesky factorization retries with a
growing diagonal jitter before giving up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

JITTER_START = 1e-12
JITTER_MAX = 1e-8


@dataclass(frozen=True)
class MaternParams:
    sigma2: float = 1.0
    rho: float = 0.5
    nu: float = 2.5

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.nu != 2.5:
            raise ValueError("only smoothness nu = 5/2 is supported")


def matern_cov(t, s, params: MaternParams = MaternParams()):
    """Covariance between process values at times t and s (elementwise)."""
    d = np.abs(np.asarray(t, dtype=float) - np.asarray(s, dtype=float))
    z = np.sqrt(5.0) * d / params.rho
    cov = params.sigma2 * (1.0 + z + z * z / 3.0) * np.exp(-z)
    if cov.ndim == 0:
        return float(cov)
    return cov


def matern_cov_matrix(grid, params: MaternParams = MaternParams()) -> np.ndarray:
    pts = grid.points
    return matern_cov(pts[:, None], pts[None, :], params)


def _jittered_cholesky(cov: np.ndarray) -> np.ndarray:
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError:
            if jitter >= JITTER_MAX:
                raise np.linalg.LinAlgError(
                    "covariance factorization failed even with maximum jitter "
                    f"{JITTER_MAX:g}; the covariance matrix is invalid"
                )
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0


def gp_sample(grid, params: MaternParams, n: int, seed) -> np.ndarray:
    """Draw n mean-zero curves on the grid; returns an (n, grid.m) array.

    Deterministic for a fixed seed.  ``seed`` may be anything accepted by
    ``numpy.random.default_rng``, including a spawned ``SeedSequence``.
    """
    if n < 1:
        raise ValueError(f"need n >= 1 curves, got {n}")
    rng = np.random.default_rng(seed)
    factor = _jittered_cholesky(matern_cov_matrix(grid, params))
    draws = rng.standard_normal((grid.m, n))
    return (factor @ draws).T
