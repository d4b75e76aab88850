"""Assemble standardized units and rotations into a full chain.

Translations are not free parameters: unit ``i + 1`` is shifted so that its
atom-1 lands on atom-3 of the already placed unit ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformation import PolymerConformation, UnitConformation, decompose, extract_frame
from .errors import NotStandardized, SizeMismatch
from .geometry import RigidTransform, check_rotation, kabsch_align
from .topology import PolymerGraph, UnitTopology

STANDARD_TOL = 1e-6


@dataclass(frozen=True)
class AssemblyInput:
    std_units: tuple[UnitConformation, ...]
    rotations: tuple[np.ndarray, ...]
    graph: PolymerGraph

    def __post_init__(self):
        object.__setattr__(self, "std_units", tuple(self.std_units))
        object.__setattr__(self, "rotations", tuple(check_rotation(r) for r in self.rotations))
        n = self.graph.n_units
        if len(self.std_units) != n or len(self.rotations) != n:
            raise SizeMismatch(
                f"expected {n} units and rotations, got {len(self.std_units)} and {len(self.rotations)}"
            )


def check_standard(unit: UnitConformation, topo: UnitTopology, tol: float = STANDARD_TOL) -> None:
    frame = extract_frame(unit, topo)
    if not frame.is_identity(tol):
        raise NotStandardized(f"unit {unit.unit_index + 1} is not in standard pose")


def apply_rotation(std_unit: UnitConformation, r, topo: UnitTopology) -> UnitConformation:
    """Rotate a standard-pose unit about the origin (where atom-3 sits)."""
    check_standard(std_unit, topo)
    r = check_rotation(r)
    return std_unit.with_coords(std_unit.coords @ r.T)


def derive_translations(rotated_units, graph: PolymerGraph) -> list[np.ndarray]:
    """Offsets that make atom-1 of each unit coincide with atom-3 of the previous.

    Evaluated incrementally: the offset of unit ``i + 1`` is read from the
    placed coordinates of unit ``i``, which equals the running sum
    ``sum_j (atom3_j - atom1_{j+1})`` of the rotated units.
    """
    units = list(rotated_units)
    out = [np.zeros(3)]
    for i in range(1, len(units)):
        prev_topo = graph.units[i - 1]
        topo = graph.units[i]
        placed_a3 = units[i - 1].coords[prev_topo.a3] + out[i - 1]
        out.append(placed_a3 - units[i].coords[topo.a1])
    return out


def _scatter(placed: list[np.ndarray], graph: PolymerGraph) -> np.ndarray:
    coords = np.empty((graph.total_atoms, 3))
    last = graph.n_units - 1
    for i, (topo, c) in enumerate(zip(graph.units, placed)):
        keep = topo.interior
        idx = graph.unit_atom_index[i]
        coords[idx[keep]] = c[keep]
        # Chain caps: the first atom-1 and last atom-4 have no duplicate.
        if i == 0:
            coords[idx[topo.a1]] = c[topo.a1]
        if i == last:
            coords[idx[topo.a4]] = c[topo.a4]
    return coords


def assemble(inp: AssemblyInput) -> PolymerConformation:
    graph = inp.graph
    rotated = [apply_rotation(u, r, t) for u, r, t in zip(inp.std_units, inp.rotations, graph.units)]
    shifts = derive_translations(rotated, graph)
    placed = [u.coords + s for u, s in zip(rotated, shifts)]
    return PolymerConformation(_scatter(placed, graph), graph.unit_of_atom)


def frames_for(rotations, std_units, graph: PolymerGraph) -> list[RigidTransform]:
    """Full frames ``(R_i, t_i)`` implied by rotations and overlap snapping."""
    rotated = [u.coords @ np.asarray(r).T for u, r in zip(std_units, rotations)]
    shifts = derive_translations([UnitConformation(i, c) for i, c in enumerate(rotated)], graph)
    return [RigidTransform(r, s) for r, s in zip(rotations, shifts)]


def assemble_from(std_units, rotations, graph: PolymerGraph) -> PolymerConformation:
    return assemble(AssemblyInput(tuple(std_units), tuple(rotations), graph))


def roundtrip_residual(conf: PolymerConformation, graph: PolymerGraph) -> float:
    """Aligned RMSD between ``conf`` and ``assemble(decompose(conf))``."""
    dec = decompose(conf, graph)
    rebuilt = assemble_from(dec.units, [f.rotation for f in dec.frames], graph)
    return kabsch_align(rebuilt.coords, conf.coords).rmsd


def double_chain(std_units, rotations, graph_factory) -> tuple[PolymerConformation, PolymerGraph]:
    """Repeat a unit/rotation sequence twice and assemble the longer chain.

    ``graph_factory(n_units)`` must return the graph for the requested length.
    """
    units = [UnitConformation(i, u.coords) for i, u in enumerate(list(std_units) * 2)]
    rots = list(rotations) * 2
    graph = graph_factory(len(units))
    return assemble_from(units, rots, graph), graph
