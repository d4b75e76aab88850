"""Forward noising and reverse sampling for torsions and unit rotations."""

from __future__ import annotations

import math

import numpy as np

from .assembly import derive_translations
from .conformation import UnitConformation, set_torsions, standardize
from .geometry import _so3_log, project_to_rotation, random_rotation, so3_exp, wrap_angle
from .schedules import DiffusionSchedule
from .so3 import igso3_sample
from .topology import PolymerGraph, UnitTopology, list_rotatable_bonds


def torsion_forward(phi0, t: int, sched: DiffusionSchedule, rng: np.random.Generator) -> np.ndarray:
    """Wrapped-Gaussian noising ``wrap(phi0 + sigma(t) * eps)``; exact identity at ``t = 0``."""
    phi0 = np.asarray(phi0, dtype=float)
    if not 0 <= t <= sched.timesteps:
        raise ValueError(f"t must lie in [0, {sched.timesteps}]")
    if t == 0:
        return phi0.copy()
    eps = rng.standard_normal(phi0.shape)
    return wrap_angle(phi0 + sched.torsion_sigma(t) * eps)


def torsion_reverse_walk(
    n_torsions: int,
    denoiser,
    condition,
    sched: DiffusionSchedule,
    rng: np.random.Generator,
    unit_index: int = 0,
    return_trajectory: bool = False,
):
    """Reverse-time walk on the torus from a uniform start.

    Each step moves by ``(sigma_t^2 - sigma_{t-1}^2) * score`` with
    ``score = -eps_hat / sigma_t`` and adds fresh noise except on the last step.
    """
    T = sched.timesteps
    phi = rng.uniform(-math.pi, math.pi, n_torsions)
    traj = [phi.copy()] if return_trajectory else None
    for t in range(T, 0, -1):
        s_t = sched.torsion_sigma(t)
        s_prev = sched.torsion_sigma(t - 1) if t > 1 else 0.0
        g2 = s_t * s_t - s_prev * s_prev
        eps_hat = np.asarray(denoiser(phi.copy(), t, s_t, condition, unit_index), dtype=float)
        if eps_hat.shape != phi.shape:
            raise ValueError(f"torsion denoiser returned shape {eps_hat.shape}, expected {phi.shape}")
        phi = phi - g2 * eps_hat / s_t
        if t > 1:
            phi = phi + math.sqrt(g2) * rng.standard_normal(n_torsions)
        phi = wrap_angle(phi)
        phi = np.atleast_1d(phi)
        if traj is not None:
            traj.append(phi.copy())
    return (phi, traj) if return_trajectory else phi


def torsion_reverse_sample(
    topo: UnitTopology,
    template: UnitConformation,
    denoiser,
    condition,
    sched: DiffusionSchedule,
    rng: np.random.Generator,
    unit_index: int = 0,
) -> UnitConformation:
    """Sample a unit's torsions and return it in standard pose.

    Bond lengths and angles come from ``template``; only the rotatable
    dihedrals are sampled.
    """
    bonds = list_rotatable_bonds(topo)
    if not bonds:
        return UnitConformation(unit_index, template.coords)
    phi = torsion_reverse_walk(len(bonds), denoiser, condition, sched, rng, unit_index)
    unit = set_torsions(UnitConformation(unit_index, template.coords), topo, bonds, phi)
    return standardize(unit, topo)[0]


def so3_forward(r0, t: int, sched: DiffusionSchedule, rng: np.random.Generator) -> np.ndarray:
    """``r0 @ IGSO3(sigma_rot[t])``; returns ``r0`` unchanged at ``t = 0``."""
    r0 = np.asarray(r0, dtype=float)
    if not 0 <= t <= sched.timesteps:
        raise ValueError(f"t must lie in [0, {sched.timesteps}]")
    if t == 0:
        return r0.copy()
    return r0 @ igso3_sample(float(sched.sigma_rot[t]), rng)


def _geodesic_step(r_hat, r_t, weight: float) -> np.ndarray:
    w, _ = _so3_log(r_hat.T @ r_t)
    return r_hat @ so3_exp(weight * w)


def so3_reverse_sample(
    denoiser,
    condition,
    std_units,
    graph: PolymerGraph,
    sched: DiffusionSchedule,
    rng: np.random.Generator,
    return_trajectory: bool = False,
):
    """Sample one rotation per unit by iterating the clean-rotation denoiser.

    At step ``t`` the current rotations and the translations implied by
    overlap snapping are handed to ``denoiser`` together with ``condition``.
    The state then moves along the geodesic towards the projected prediction,
    keeping a fraction ``sigma_{t-1}^2 / sigma_t^2`` of the remaining offset,
    and receives IGSO3 noise of the matching posterior scale.  The final step
    lands on the prediction.
    """
    std_units = list(std_units)
    n = len(std_units)
    T = sched.timesteps
    rots = [random_rotation(rng) for _ in range(n)]
    traj = [np.stack(rots)] if return_trajectory else None
    for t in range(T, 0, -1):
        rotated = [UnitConformation(i, u.coords @ r.T) for i, (u, r) in enumerate(zip(std_units, rots))]
        trans = np.stack(derive_translations(rotated, graph))
        raw = np.asarray(denoiser(np.stack(rots), trans, t, condition, std_units, graph), dtype=float)
        if raw.shape != (n, 3, 3):
            raise ValueError(f"rotation denoiser returned shape {raw.shape}, expected {(n, 3, 3)}")
        r_hat = [project_to_rotation(m) for m in raw]
        if t > 1:
            s_t = float(sched.sigma_rot[t])
            s_prev = float(sched.sigma_rot[t - 1])
            weight = s_prev**2 / s_t**2
            noise = math.sqrt(s_prev**2 * (s_t**2 - s_prev**2)) / s_t
            rots = [_geodesic_step(rh, r, weight) @ igso3_sample(noise, rng) for rh, r in zip(r_hat, rots)]
        else:
            rots = r_hat
        if traj is not None:
            traj.append(np.stack(rots))
    return (rots, traj) if return_trajectory else rots
