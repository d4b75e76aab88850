"""Rotations, rigid frames and optimal superposition.

Points are stored as rows of ``(n, 3)`` arrays.  A rotation ``R`` acts on a
column vector as ``R @ p``; on a row array that is ``points @ R.T``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateFrame, NearPiAmbiguity, ProjectionFailure, SizeMismatch

ORTHO_TOL = 1e-9
NEAR_PI = 1e-6


def as_points(x, name="points") -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 1 and a.shape[0] == 3:
        a = a[None, :]
    if a.ndim != 2 or a.shape[1] != 3:
        raise SizeMismatch(f"{name} must have shape (n, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite coordinates")
    return a


def is_rotation(m, tol: float = ORTHO_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        return False
    if np.max(np.abs(m.T @ m - np.eye(3))) > tol:
        return False
    return abs(np.linalg.det(m) - 1.0) <= tol


def check_rotation(m, tol: float = ORTHO_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if not is_rotation(m, tol):
        raise ValueError("matrix is not a proper rotation")
    return m


@dataclass(frozen=True)
class RigidTransform:
    """Rotation followed by translation: ``p -> R @ p + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float)
        t = np.array(self.translation, dtype=float).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def inverse(self) -> RigidTransform:
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """Return ``self ∘ other`` (apply ``other`` first)."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def is_identity(self, tol: float = 1e-9) -> bool:
        return bool(
            np.max(np.abs(self.rotation - np.eye(3))) <= tol
            and np.max(np.abs(self.translation)) <= tol
        )


def gram_schmidt_rotation(v1, v2, eps_len: float = 1e-8, eps_ang: float = 1e-6) -> np.ndarray:
    """Orthonormal frame whose first column is along ``v1``.

    The second column is the part of ``v2`` orthogonal to ``v1`` and the third
    is their cross product.

    Raises:
        DegenerateFrame: ``v1`` or ``v2`` is (near) zero, or the two vectors
            are within ``eps_ang`` radians of parallel.
    """
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    n1 = np.linalg.norm(v1)
    n2 = np.linalg.norm(v2)
    if not (n1 > eps_len and n2 > eps_len):
        raise DegenerateFrame(f"frame vector too short (|v1|={n1:.3g}, |v2|={n2:.3g})")
    e1 = v1 / n1
    cross = np.cross(e1, v2 / n2)
    sin_ang = np.linalg.norm(cross)
    angle = math.atan2(sin_ang, float(np.dot(e1, v2 / n2)))
    if angle <= eps_ang or angle >= math.pi - eps_ang:
        raise DegenerateFrame(f"frame vectors are parallel (angle {angle:.3g} rad)")
    u2 = v2 - np.dot(e1, v2) * e1
    e2 = u2 / np.linalg.norm(u2)
    e3 = np.cross(e1, e2)
    return np.column_stack([e1, e2, e3])


class Alignment(NamedTuple):
    transform: RigidTransform
    rmsd: float
    degenerate: bool


def rmsd(p, q) -> float:
    """Root-mean-square distance between corresponding rows, no superposition."""
    p = as_points(p, "P")
    q = as_points(q, "Q")
    if p.shape != q.shape:
        raise SizeMismatch(f"point sets differ in size: {len(p)} vs {len(q)}")
    if len(p) == 0:
        raise SizeMismatch("rmsd needs at least one point")
    d = p - q
    return math.sqrt(float(np.sum(d * d)) / len(p))


def kabsch_align(p, q) -> Alignment:
    """Rigid transform minimising ``rmsd(transform.apply(p), q)``.

    ``degenerate`` is set when ``p`` is collinear, in which case the rotation
    about the line is arbitrary but the returned rmsd is still optimal.
    """
    p = as_points(p, "P")
    q = as_points(q, "Q")
    if p.shape != q.shape:
        raise SizeMismatch(f"point sets differ in size: {len(p)} vs {len(q)}")
    if len(p) < 3:
        raise SizeMismatch("kabsch_align needs at least 3 points")
    pc = p.mean(axis=0)
    qc = q.mean(axis=0)
    p0 = p - pc
    q0 = q - qc
    h = p0.T @ q0
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    if d == 0:
        d = 1.0
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = qc - r @ pc
    sp = np.linalg.svd(p0, compute_uv=False)
    degenerate = bool(sp[0] == 0 or sp[1] <= 1e-10 * sp[0])
    aligned = p0 @ r.T
    diff = aligned - q0
    value = math.sqrt(float(np.sum(diff * diff)) / len(p))
    return Alignment(RigidTransform(r, t), value, degenerate)


def aligned_rmsd(p, q) -> float:
    return kabsch_align(p, q).rmsd


def hat(w) -> np.ndarray:
    x, y, z = np.asarray(w, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]]) / 2.0


def so3_exp(w) -> np.ndarray:
    """Rotation for axis-angle vector ``w`` (Rodrigues)."""
    w = np.asarray(w, dtype=float).reshape(3)
    theta = float(np.linalg.norm(w))
    k = hat(w)
    if theta < 1e-6:
        a = 1.0 - theta**2 / 6.0 + theta**4 / 120.0
        b = 0.5 - theta**2 / 24.0 + theta**4 / 720.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / theta**2
    return np.eye(3) + a * k + b * (k @ k)


def rotation_angle(r) -> float:
    r = np.asarray(r, dtype=float)
    s = float(np.linalg.norm(vee(r)))
    c = (float(np.trace(r)) - 1.0) / 2.0
    return math.atan2(s, c)


def _so3_log(r) -> tuple[np.ndarray, bool]:
    r = np.asarray(r, dtype=float)
    v = vee(r)
    s = float(np.linalg.norm(v))
    c = (float(np.trace(r)) - 1.0) / 2.0
    theta = math.atan2(s, c)
    if theta < 1e-6:
        return v * (1.0 + theta**2 / 6.0), False
    if theta < math.pi / 2:
        return v * (theta / s), False
    # Large angles: the symmetric part gives the axis without dividing by sin.
    sym = (r + r.T) / 2.0 - c * np.eye(3)
    i = int(np.argmax(np.diag(sym)))
    axis = sym[:, i] / math.sqrt(max(sym[i, i], 0.0))
    axis /= np.linalg.norm(axis)
    ambiguous = math.pi - theta < NEAR_PI
    if ambiguous or s < 1e-12:
        j = int(np.argmax(np.abs(axis)))
        if axis[j] < 0:
            axis = -axis
        ambiguous = True
    elif np.dot(axis, v) < 0:
        axis = -axis
    return axis * theta, ambiguous


def so3_log(r) -> np.ndarray:
    """Axis-angle vector of a rotation, with angle in ``[0, pi]``.

    Within ``1e-6`` rad of ``pi`` the axis sign is fixed so that its
    largest-magnitude component is positive and a ``NearPiAmbiguity`` warning
    is emitted.
    """
    w, ambiguous = _so3_log(r)
    if ambiguous:
        warnings.warn("rotation angle is numerically pi; log branch is canonical", NearPiAmbiguity, stacklevel=2)
    return w


def geodesic_distance(r1, r2) -> float:
    """Angle of the relative rotation ``r1.T @ r2``, in ``[0, pi]``."""
    return rotation_angle(np.asarray(r1, dtype=float).T @ np.asarray(r2, dtype=float))


def project_to_rotation(m, rank_tol: float = 1e-8) -> np.ndarray:
    """Nearest proper rotation in Frobenius norm (polar decomposition)."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ProjectionFailure("denoiser output is not a finite 3x3 matrix")
    u, s, vt = np.linalg.svd(m)
    if s[0] == 0 or s[2] < rank_tol * s[0]:
        raise ProjectionFailure(f"matrix is rank deficient (singular values {s})")
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def axis_rotation(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    return so3_exp(axis / np.linalg.norm(axis) * angle)


def rotation_between(u, w) -> np.ndarray:
    """Smallest rotation taking direction ``u`` onto direction ``w``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    u = u / np.linalg.norm(u)
    w = w / np.linalg.norm(w)
    axis = np.cross(u, w)
    s = np.linalg.norm(axis)
    c = float(np.dot(u, w))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # Antiparallel: half turn about any axis perpendicular to u.
        perp = np.cross(u, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(u, [0.0, 1.0, 0.0])
        return axis_rotation(perp, math.pi)
    return axis_rotation(axis, math.atan2(s, c))


def dihedral(a, b, c, d) -> float:
    """Signed dihedral angle a-b-c-d in ``(-pi, pi]``."""
    a, b, c, d = (np.asarray(x, dtype=float) for x in (a, b, c, d))
    b0 = a - b
    b1 = c - b
    b2 = d - c
    b1n = b1 / np.linalg.norm(b1)
    v = b0 - np.dot(b0, b1n) * b1n
    w = b2 - np.dot(b2, b1n) * b1n
    x = float(np.dot(v, w))
    y = float(np.dot(np.cross(b1n, v), w))
    return math.atan2(y, x)


def bond_angle(a, b, c) -> float:
    """Angle at ``b`` in radians."""
    u = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    v = np.asarray(c, dtype=float) - np.asarray(b, dtype=float)
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


def wrap_angle(x):
    """Wrap to ``(-pi, pi]``."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, 2 * math.pi) - math.pi
    y = np.where(y == -math.pi, math.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform rotation from a normalised Gaussian quaternion."""
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
