"""Isotropic Gaussian distribution on SO(3) (IGSO3).

The angle density uses the truncated character expansion

    f(w) = sum_l (2l + 1) exp(-l (l + 1) sigma^2 / 2) sin((l + 1/2) w) / sin(w / 2)

weighted by the Haar marginal ``(1 - cos w) / pi``.  For small ``sigma`` the
series needs far more than ``L`` terms; there the distribution is sampled as
``exp(sigma * z)`` with ``z ~ N(0, I3)``, its small-scale limit.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .geometry import so3_exp

N_TERMS = 100
GRID_SIZE = 4096
SMALL_SIGMA = 0.1


def igso3_expansion(omega, sigma: float, n_terms: int = N_TERMS) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    ls = np.arange(n_terms, dtype=float)
    w = omega[..., None]
    half = np.sin(w / 2.0)
    # sin((l+1/2)w)/sin(w/2) -> 2l+1 as w -> 0
    with np.errstate(invalid="ignore", divide="ignore"):
        char = np.where(np.abs(half) < 1e-12, 2 * ls + 1, np.sin((ls + 0.5) * w) / half)
    terms = (2 * ls + 1) * np.exp(-ls * (ls + 1) * sigma**2 / 2.0) * char
    return terms.sum(axis=-1)


def angle_density(omega, sigma: float, n_terms: int = N_TERMS) -> np.ndarray:
    """Marginal density of the rotation angle on ``[0, pi]``."""
    omega = np.asarray(omega, dtype=float)
    return igso3_expansion(omega, sigma, n_terms) * (1.0 - np.cos(omega)) / math.pi


@lru_cache(maxsize=4096)
def _angle_table(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    grid = np.linspace(0.0, math.pi, GRID_SIZE)
    pdf = np.clip(angle_density(grid, sigma), 0.0, None)
    cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) / 2.0 * np.diff(grid))])
    cdf /= cdf[-1]
    return grid, cdf


def sample_angles(sigma: float, n: int, rng: np.random.Generator) -> np.ndarray:
    grid, cdf = _angle_table(float(sigma))
    return np.interp(rng.random(n), cdf, grid)


def igso3_sample_vectors(sigma: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` axis-angle vectors drawn from IGSO3(sigma)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if sigma < SMALL_SIGMA:
        return sigma * rng.standard_normal((n, 3))
    axis = rng.standard_normal((n, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    return axis * sample_angles(sigma, n, rng)[:, None]


def igso3_sample(sigma: float, rng: np.random.Generator) -> np.ndarray:
    """One rotation drawn from IGSO3 centred on the identity."""
    return so3_exp(igso3_sample_vectors(sigma, 1, rng)[0])


def igso3_sample_batch(sigma: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([so3_exp(w) for w in igso3_sample_vectors(sigma, n, rng)])
