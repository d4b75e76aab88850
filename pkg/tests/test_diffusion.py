import math

import numpy as np
import pytest
from scipy import integrate

from polyframe.builders import random_polymer
from polyframe.diffusion import (
    so3_forward,
    so3_reverse_sample,
    torsion_forward,
    torsion_reverse_sample,
    torsion_reverse_walk,
)
from polyframe.errors import ProjectionFailure
from polyframe.geometry import geodesic_distance, is_rotation, random_rotation, rotation_angle, wrap_angle
from polyframe.oracles import GroundTruthRotationDenoiser, GroundTruthTorsionDenoiser, IdentityRotationDenoiser
from polyframe.schedules import make_schedule
from polyframe.so3 import angle_density, igso3_sample_batch, igso3_sample_vectors


def quad_moment(sigma, power, n_terms=3000):
    """E[omega^power] under IGSO3 by adaptive quadrature of the series density."""
    num = integrate.quad(lambda w: w**power * angle_density(w, sigma, n_terms), 0, math.pi, limit=200)[0]
    den = integrate.quad(lambda w: angle_density(w, sigma, n_terms), 0, math.pi, limit=200)[0]
    return num / den


@pytest.mark.parametrize("sigma", [0.2, 0.5, 1.0, 1.5])
def test_angle_density_normalized(sigma):
    z = integrate.quad(lambda w: angle_density(w, sigma), 0, math.pi, limit=200)[0]
    assert z == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("sigma", [0.03, 0.2, 0.8, 1.5])
def test_igso3_second_moment(sigma):
    rng = np.random.default_rng(4)
    w = igso3_sample_vectors(sigma, 20_000, rng)
    m2 = np.mean(np.sum(w * w, axis=1))
    assert m2 == pytest.approx(quad_moment(sigma, 2), rel=0.03)


def test_igso3_isotropic():
    w = igso3_sample_vectors(0.7, 20_000, np.random.default_rng(1))
    axes = w / np.linalg.norm(w, axis=1, keepdims=True)
    assert np.allclose(axes.mean(axis=0), 0, atol=0.03)
    assert all(is_rotation(r) for r in igso3_sample_batch(0.7, 10, np.random.default_rng(2)))


def test_igso3_sigma_positive():
    with pytest.raises(ValueError):
        igso3_sample_vectors(0.0, 1, np.random.default_rng(0))


def test_forward_identity_at_zero(rng):
    sched = make_schedule("cosine", 50)
    phi = rng.uniform(-3, 3, 7)
    out = torsion_forward(phi, 0, sched, rng)
    assert np.array_equal(out, phi) and out is not phi
    r = random_rotation(rng)
    assert np.array_equal(so3_forward(r, 0, sched, rng), r)
    with pytest.raises(ValueError):
        torsion_forward(phi, 51, sched, rng)


def test_torsion_forward_variance():
    sched = make_schedule("cosine", 200)
    rng = np.random.default_rng(8)
    phi0 = np.full(20_000, 0.4)
    t = 50
    d = wrap_angle(torsion_forward(phi0, t, sched, rng) - phi0)
    assert np.var(d) == pytest.approx(sched.torsion_sigma(t) ** 2, rel=0.05)


def test_so3_forward_angle_moment():
    sched = make_schedule("cosine", 100)
    rng = np.random.default_rng(9)
    r0 = random_rotation(rng)
    t = 40
    ang = np.array([geodesic_distance(r0, so3_forward(r0, t, sched, rng)) for _ in range(4000)])
    assert np.mean(ang**2) == pytest.approx(quad_moment(float(sched.sigma_rot[t]), 2), rel=0.06)


def test_torsion_reverse_oracle_converges(rng):
    target = rng.uniform(-math.pi, math.pi, 4)
    den = GroundTruthTorsionDenoiser([target])
    phi, traj = torsion_reverse_walk(4, den, None, make_schedule("cosine", 100), rng, 0, return_trajectory=True)
    assert np.allclose(wrap_angle(phi - target), 0, atol=1e-9)
    assert len(traj) == 101
    err = [np.abs(wrap_angle(p - target)).max() for p in traj]
    assert err[-1] <= err[0]


def test_torsion_reverse_rejects_bad_shape(rng):
    with pytest.raises(ValueError):
        torsion_reverse_walk(3, lambda *a: np.zeros(2), None, make_schedule("cosine", 5), rng)


def test_torsion_reverse_sample_standardized(small_polymer, rng):
    graph, _, units, _ = small_polymer
    topo = graph.units[0]
    den = GroundTruthTorsionDenoiser.from_units(units, graph)
    out = torsion_reverse_sample(topo, units[2], den, None, make_schedule("cosine", 30), rng, unit_index=2)
    assert np.allclose(out.coords, units[2].coords, atol=1e-9)


def test_so3_reverse_oracle_converges(small_polymer, rng):
    graph, _, units, rots = small_polymer
    sched = make_schedule("cosine", 60)
    out, traj = so3_reverse_sample(GroundTruthRotationDenoiser(rots), None, units, graph, sched, rng, True)
    assert len(traj) == 61
    for a, b in zip(out, rots):
        assert np.allclose(a, b, atol=1e-12)
    # distance to the target shrinks over the trajectory on average
    d = [np.mean([rotation_angle(r.T @ g) for r, g in zip(step, rots)]) for step in traj]
    assert d[-2] < d[0]


def test_so3_reverse_rejects_degenerate(small_polymer, rng):
    graph, _, units, _ = small_polymer
    with pytest.raises(ProjectionFailure):
        so3_reverse_sample(lambda r, *a: np.zeros_like(r), None, units, graph, make_schedule("cosine", 3), rng)
    with pytest.raises(ValueError):
        so3_reverse_sample(lambda r, *a: r[:1], None, units, graph, make_schedule("cosine", 3), rng)


def test_identity_denoiser_outputs_rotations(rng):
    graph, _, units, _ = random_polymer(rng, 3, 6)
    out = so3_reverse_sample(IdentityRotationDenoiser(), None, units, graph, make_schedule("cosine", 5), rng)
    assert all(np.allclose(r, np.eye(3)) for r in out)


def test_torsion_oracle_recovery_sigma_max_one(small_polymer, rng):
    graph, _, units, _ = small_polymer
    den = GroundTruthTorsionDenoiser.from_units(units, graph)
    sched = make_schedule("cosine", 200, torsion_sigma_max=1.0)
    assert sched.torsion_sigma(200) == pytest.approx(1.0, rel=1e-6)
    for i in range(graph.n_units):
        phi = torsion_reverse_walk(len(den.targets[i]), den, None, sched, rng, unit_index=i)
        assert np.abs(wrap_angle(phi - den.targets[i])).max() < 0.05
