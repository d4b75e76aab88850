"""Unit and chain conformations, frame extraction and decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import JunctionViolation, SizeMismatch
from .geometry import RigidTransform, as_points, axis_rotation, dihedral, gram_schmidt_rotation
from .topology import PolymerGraph, RotatableBond, UnitTopology, rotatable_bond

JUNCTION_MAX = 2.0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class UnitConformation:
    """Coordinates of one extended unit, overlap atoms included."""

    unit_index: int
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(as_points(self.coords, "unit coords")))

    def with_coords(self, coords) -> UnitConformation:
        return UnitConformation(self.unit_index, coords)


@dataclass(frozen=True, eq=False)
class PolymerConformation:
    coords: np.ndarray
    unit_of_atom: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen(as_points(self.coords, "conformation coords")))
        u = np.array(self.unit_of_atom, dtype=np.int64)
        u.setflags(write=False)
        object.__setattr__(self, "unit_of_atom", u)
        if len(u) != len(self.coords):
            raise SizeMismatch("unit labels and coordinates differ in length")

    @classmethod
    def from_coords(cls, coords, graph: PolymerGraph) -> PolymerConformation:
        return cls(coords, graph.unit_of_atom)

    @property
    def n_atoms(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class DecompositionResult:
    units: tuple[UnitConformation, ...]
    frames: tuple[RigidTransform, ...]


def extract_frame(unit: UnitConformation, topo: UnitTopology) -> RigidTransform:
    """Frame anchored at atom-3 with axes from atom-1 and atom-4.

    ``R = gram_schmidt_rotation(atom-1 - atom-3, atom-4 - atom-3)``,
    ``t = atom-3``.
    """
    c = unit.coords
    if len(c) != topo.n_atoms:
        raise SizeMismatch(f"unit has {len(c)} coordinates, topology has {topo.n_atoms} atoms")
    origin = c[topo.a3]
    r = gram_schmidt_rotation(c[topo.a1] - origin, c[topo.a4] - origin)
    return RigidTransform(r, origin)


def to_standard(unit: UnitConformation, frame: RigidTransform) -> UnitConformation:
    """Undo ``frame``: row-wise ``(coords - t) @ R``, i.e. ``R^-1 (p - t)``."""
    return unit.with_coords((unit.coords - frame.translation) @ frame.rotation)


def standardize(unit: UnitConformation, topo: UnitTopology) -> tuple[UnitConformation, RigidTransform]:
    frame = extract_frame(unit, topo)
    return to_standard(unit, frame), frame


def place(unit: UnitConformation, frame: RigidTransform) -> UnitConformation:
    return unit.with_coords(frame.apply(unit.coords))


def junction_lengths(coords: np.ndarray, graph: PolymerGraph) -> np.ndarray:
    if not graph.inter_unit_bonds:
        return np.zeros(0)
    a, b = np.array(graph.inter_unit_bonds).T
    return np.linalg.norm(coords[a] - coords[b], axis=1)


def check_conformation(conf: PolymerConformation, graph: PolymerGraph, max_junction: float = JUNCTION_MAX) -> None:
    if conf.n_atoms != graph.total_atoms:
        raise SizeMismatch(f"conformation has {conf.n_atoms} atoms, graph expects {graph.total_atoms}")
    lengths = junction_lengths(conf.coords, graph)
    if len(lengths) and lengths.max() >= max_junction:
        k = int(np.argmax(lengths))
        raise JunctionViolation(
            f"junction between units {k + 1} and {k + 2} is {lengths[k]:.3f} A (limit {max_junction} A)"
        )


def unit_coords(conf: PolymerConformation, graph: PolymerGraph, i: int) -> UnitConformation:
    """Slice unit ``i`` (0-based) out of the chain, overlap atoms included."""
    return UnitConformation(i, conf.coords[graph.unit_atom_index[i]])


def decompose(
    conf: PolymerConformation, graph: PolymerGraph, max_junction: float = JUNCTION_MAX
) -> DecompositionResult:
    """Split a chain into standardized units and their frames."""
    check_conformation(conf, graph, max_junction)
    units = []
    frames = []
    for i, topo in enumerate(graph.units):
        std, frame = standardize(unit_coords(conf, graph, i), topo)
        units.append(std)
        frames.append(frame)
    return DecompositionResult(tuple(units), tuple(frames))


def measure_torsion(coords: np.ndarray, bond: RotatableBond) -> float:
    a, b, c, d = bond.quad
    return dihedral(coords[a], coords[b], coords[c], coords[d])


def measure_torsions(coords: np.ndarray, bonds: list[RotatableBond]) -> np.ndarray:
    return np.array([measure_torsion(coords, rb) for rb in bonds], dtype=float)


def rotate_torsion(
    unit: UnitConformation, topo: UnitTopology, bond: RotatableBond | tuple[int, int], delta: float
) -> UnitConformation:
    """Turn the side of ``bond`` away from atom-3 by ``delta`` radians.

    The handle's dihedral ``quad`` increases by exactly ``delta`` (mod 2 pi);
    bond lengths and angles are untouched.
    """
    if not isinstance(bond, RotatableBond):
        bond = rotatable_bond(topo, *bond)
    if delta == 0:
        return unit
    _, b, c, _ = bond.quad
    coords = np.array(unit.coords)
    origin = coords[b]
    rot = axis_rotation(coords[c] - origin, delta)
    idx = list(bond.moving)
    coords[idx] = (coords[idx] - origin) @ rot.T + origin
    return unit.with_coords(coords)


def set_torsions(
    unit: UnitConformation, topo: UnitTopology, bonds: list[RotatableBond], targets
) -> UnitConformation:
    """Rotate each handle so its dihedral equals the matching target."""
    out = unit
    for rb, target in zip(bonds, np.asarray(targets, dtype=float)):
        out = rotate_torsion(out, topo, rb, target - measure_torsion(out.coords, rb))
    return out
