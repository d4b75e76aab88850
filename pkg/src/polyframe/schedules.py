"""Noise schedules and masked-autoregressive (MAR) generation order."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, IndexOutOfRange, InvalidK, InvalidTimesteps

TORSION_SIGMA_MAX = math.pi / 2
ROT_SIGMA_MIN = 1e-3
ROT_SIGMA_MAX = 1.5
COSINE_OFFSET = 0.008
MAX_BETA = 0.999


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    """``alpha_bar[t]`` and rotation scales ``sigma_rot[t]`` for ``t = 0..T``."""

    kind: str
    alpha_bar: np.ndarray
    sigma_rot: np.ndarray
    torsion_sigma_max: float = TORSION_SIGMA_MAX

    @property
    def timesteps(self) -> int:
        return len(self.alpha_bar) - 1

    def torsion_sigma(self, t: int) -> float:
        return math.sqrt(1.0 - float(self.alpha_bar[t])) * self.torsion_sigma_max


def make_schedule(
    kind: str = "cosine",
    timesteps: int = 1000,
    torsion_sigma_max: float = TORSION_SIGMA_MAX,
    rot_sigma_min: float = ROT_SIGMA_MIN,
    rot_sigma_max: float = ROT_SIGMA_MAX,
) -> DiffusionSchedule:
    """Cosine (default) or linear-beta schedule.

    ``sigma_rot`` rises from ``rot_sigma_min`` to ``rot_sigma_max`` following
    ``sqrt(1 - alpha_bar)``.
    """
    if int(timesteps) != timesteps or timesteps < 1:
        raise InvalidTimesteps(f"timesteps must be a positive integer, got {timesteps}")
    T = int(timesteps)
    if kind == "cosine":
        s = COSINE_OFFSET
        f = np.cos((np.arange(T + 1) / T + s) / (1 + s) * math.pi / 2) ** 2
        betas = 1.0 - f[1:] / f[:-1]
    elif kind == "linear":
        # Endpoints rescaled so short schedules still reach a noisy state.
        scale = 1000.0 / T
        betas = np.linspace(scale * 1e-4, scale * 0.02, T)
    else:
        raise ValueError(f"unknown schedule kind {kind!r}")
    betas = np.clip(betas, 1e-12, MAX_BETA)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    sigma_rot = rot_sigma_min + (rot_sigma_max - rot_sigma_min) * np.sqrt(1.0 - alpha_bar)
    alpha_bar.setflags(write=False)
    sigma_rot.setflags(write=False)
    return DiffusionSchedule(kind, alpha_bar, sigma_rot, torsion_sigma_max)


@dataclass(frozen=True, eq=False)
class MarSchedule:
    """Random generation order split into ``K`` consecutive subsets."""

    permutation: np.ndarray
    subsets: tuple[tuple[int, ...], ...]

    @property
    def k_steps(self) -> int:
        return len(self.subsets)


def partition(order, k_steps: int) -> tuple[tuple[int, ...], ...]:
    """Split ``order`` into ``k_steps`` chunks of ``len // k``; the last absorbs the rest."""
    n = len(order)
    m = n // k_steps
    out = [tuple(int(x) for x in order[k * m : (k + 1) * m]) for k in range(k_steps - 1)]
    out.append(tuple(int(x) for x in order[(k_steps - 1) * m :]))
    return tuple(out)


def mar_schedule(n_units: int, k_steps: int, rng: np.random.Generator) -> MarSchedule:
    if not 1 <= k_steps <= n_units:
        raise InvalidK(f"K must satisfy 1 <= K <= {n_units}, got {k_steps}")
    perm = rng.permutation(n_units)
    perm.setflags(write=False)
    return MarSchedule(perm, partition(perm, k_steps))


def mask_rows(x, mask_set) -> np.ndarray:
    """Zero the rows listed in ``mask_set``; other rows are copied bit for bit."""
    x = np.asarray(x, dtype=float)
    out = x.copy()
    idx = sorted(set(int(i) for i in mask_set))
    if idx and (idx[0] < 0 or idx[-1] >= len(x)):
        raise IndexOutOfRange(f"mask indices must lie in 0..{len(x) - 1}")
    out[idx] = 0.0
    return out


def mean_pool(e) -> np.ndarray:
    """Average of the rows, returned as a 1-row matrix."""
    e = np.asarray(e, dtype=float)
    if e.ndim != 2 or len(e) == 0:
        raise EmptyMatrix("mean_pool needs a non-empty 2-D matrix")
    return e.mean(axis=0, keepdims=True)
