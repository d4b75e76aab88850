"""Chain growth and randomized test polymers."""

from __future__ import annotations

import math

import numpy as np

from .assembly import assemble_from
from .conformation import PolymerConformation, UnitConformation, set_torsions, standardize
from .errors import DegenerateFrame
from .geometry import axis_rotation, bond_angle, random_rotation, rotation_between
from .templates import ideal_template
from .topology import PolymerGraph, UnitTopology, build_polymer_graph, list_rotatable_bonds


def junction_rotation(prev_a3, prev_a4, std_unit: UnitConformation, topo: UnitTopology, spin: float) -> np.ndarray:
    """Rotation placing atom-1 -> atom-2 of a unit along the previous atom-3 -> atom-4.

    ``spin`` is the remaining freedom: a turn about that shared bond.
    """
    u = std_unit.coords[topo.a2] - std_unit.coords[topo.a1]
    w = np.asarray(prev_a4, dtype=float) - np.asarray(prev_a3, dtype=float)
    return axis_rotation(w, spin) @ rotation_between(u, w)


def closest_junction_rotation(prev_a3, prev_a4, std_unit, topo, current) -> np.ndarray:
    """Junction-consistent rotation nearest (Frobenius) to ``current``."""
    base = junction_rotation(prev_a3, prev_a4, std_unit, topo, 0.0)
    w = np.asarray(prev_a4, dtype=float) - np.asarray(prev_a3, dtype=float)
    w = w / np.linalg.norm(w)
    m = np.asarray(current) @ base.T
    k = np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])
    ww = float(w @ m @ w)
    spin = math.atan2(float(np.sum(k * m)), float(np.trace(m)) - ww)
    return axis_rotation(w, spin) @ base


def grow_chain(std_units, graph: PolymerGraph, first_rotation, spins) -> list[np.ndarray]:
    """Rotations for a chain where every unit's atom-2 lands on the previous atom-4.

    ``spins`` holds one angle per junction (``n_units - 1`` values).
    """
    rotations = [np.asarray(first_rotation, dtype=float)]
    placed = std_units[0].coords @ rotations[0].T
    for i in range(1, graph.n_units):
        prev = graph.units[i - 1]
        topo = graph.units[i]
        r = junction_rotation(placed[prev.a3], placed[prev.a4], std_units[i], topo, spins[i - 1])
        rotations.append(r)
        rotated = std_units[i].coords @ r.T
        placed = rotated + (placed[prev.a3] - rotated[topo.a1])
    return rotations


def with_torsions(template: UnitConformation, topo: UnitTopology, torsions, unit_index: int = 0) -> UnitConformation:
    """Template with its rotatable dihedrals set, re-standardized."""
    bonds = list_rotatable_bonds(topo)
    unit = set_torsions(template, topo, bonds, torsions)
    return UnitConformation(unit_index, standardize(unit, topo)[0].coords)


def random_unit_topology(n_atoms: int, rng: np.random.Generator) -> UnitTopology:
    """Random acyclic unit: a carbon backbone atom-1 ... atom-4 plus side atoms."""
    if n_atoms < 4:
        raise ValueError("a unit needs at least 4 atoms")
    backbone = int(rng.integers(4, min(n_atoms, 8) + 1))
    valence = {"C": 4, "N": 3, "O": 2, "H": 1}
    elements = ["C"] * backbone
    bonds = [(i, i + 1, 1.0) for i in range(backbone - 1)]
    degree = [1] + [2] * (backbone - 2) + [1]
    # atom-1 and atom-4 (ends of the backbone) belong to neighbours: no side atoms.
    hosts = list(range(1, backbone - 1))
    for k in range(backbone, n_atoms):
        open_hosts = [h for h in hosts if degree[h] < valence[elements[h]]]
        h = int(rng.choice(open_hosts))
        free = sum(valence[elements[x]] - degree[x] for x in open_hosts)
        if free <= 1 and n_atoms - k > 1:
            # last open slot: a carbon keeps the tree growable
            e = "C"
        else:
            e = str(rng.choice(["C", "C", "N", "O", "H", "H"]))
        elements.append(e)
        bonds.append((h, k, 1.0))
        degree[h] += 1
        degree.append(1)
        hosts.append(k)
    key = {"atom-1": 0, "atom-2": 1, "atom-3": backbone - 2, "atom-4": backbone - 1}
    return UnitTopology(elements, bonds, key, name=f"rand{n_atoms}")


def _frame_ok(unit: UnitConformation, topo: UnitTopology, min_angle: float = 0.2) -> bool:
    c = unit.coords
    ang = bond_angle(c[topo.a1], c[topo.a3], c[topo.a4])
    return min_angle < ang < math.pi - min_angle


def random_polymer(
    rng: np.random.Generator,
    n_units: int,
    n_atoms: int | None = None,
    topo: UnitTopology | None = None,
) -> tuple[PolymerGraph, PolymerConformation, list[UnitConformation], list[np.ndarray]]:
    """Random homopolymer with idealized units, random torsions and spins.

    Returns the graph, the chain, and the ground-truth standardized units and
    rotations it was assembled from.
    """
    if topo is None:
        topo = random_unit_topology(n_atoms, rng)
    graph = build_polymer_graph(topo, n_units)
    template = ideal_template(topo)
    n_tor = len(list_rotatable_bonds(topo))
    units = []
    for i in range(n_units):
        for _ in range(100):
            try:
                u = with_torsions(template, topo, rng.uniform(-math.pi, math.pi, n_tor), i)
            except DegenerateFrame:
                continue
            if _frame_ok(u, topo):
                break
        else:
            raise DegenerateFrame("could not draw a unit with a well-conditioned frame")
        units.append(u)
    rotations = grow_chain(units, graph, random_rotation(rng), rng.uniform(-math.pi, math.pi, n_units - 1))
    conf = assemble_from(units, rotations, graph)
    return graph, conf, units, rotations
