"""Unit and chain topology for homopolymers built from extended repeating units.

An extended unit carries two borrowed atoms besides its own: ``atom-1`` is the
preceding unit's ``atom-3`` and ``atom-4`` is the following unit's ``atom-2``.
In the flat chain every physical atom is stored once; the first unit keeps its
``atom-1`` and the last unit its ``atom-4`` as chain caps.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidUnitSpec, NotRotatable

ROLES = ("atom-1", "atom-2", "atom-3", "atom-4")


@dataclass(frozen=True)
class UnitTopology:
    elements: tuple[str, ...]
    bonds: tuple[tuple[int, int, float], ...]
    key_atoms: dict[str, int]
    name: str = "unit"

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(
            self, "bonds", tuple((int(i), int(j), float(o)) for i, j, o in self.bonds)
        )
        object.__setattr__(self, "key_atoms", dict(self.key_atoms))
        self.validate()

    def __hash__(self):
        return hash((self.elements, self.bonds, tuple(sorted(self.key_atoms.items())), self.name))

    @property
    def n_atoms(self) -> int:
        return len(self.elements)

    @property
    def a1(self) -> int:
        return self.key_atoms["atom-1"]

    @property
    def a2(self) -> int:
        return self.key_atoms["atom-2"]

    @property
    def a3(self) -> int:
        return self.key_atoms["atom-3"]

    @property
    def a4(self) -> int:
        return self.key_atoms["atom-4"]

    @property
    def interior(self) -> list[int]:
        """Local indices of the atoms the unit owns (all but atom-1 and atom-4)."""
        return [i for i in range(self.n_atoms) if i not in (self.a1, self.a4)]

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n_atoms)]
        for i, j, _ in self.bonds:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [sorted(n) for n in nbrs]

    def bond_order(self, i: int, j: int) -> float | None:
        for a, b, o in self.bonds:
            if {a, b} == {i, j}:
                return o
        return None

    def validate(self) -> None:
        n = self.n_atoms
        if n < 4:
            raise InvalidUnitSpec(f"unit needs at least 4 atoms, has {n}")
        for role in ROLES:
            if role not in self.key_atoms:
                raise InvalidUnitSpec(f"missing key-atom role {role}")
        extra = set(self.key_atoms) - set(ROLES)
        if extra:
            raise InvalidUnitSpec(f"unknown key-atom roles {sorted(extra)}")
        idx = [self.key_atoms[r] for r in ROLES]
        for role, i in zip(ROLES, idx):
            if not 0 <= i < n:
                raise InvalidUnitSpec(f"key atom {role} index {i} out of range 0..{n - 1}")
        if len(set(idx)) != 4:
            raise InvalidUnitSpec("key atoms must be pairwise distinct")
        seen = set()
        for i, j, o in self.bonds:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise InvalidUnitSpec(f"bond ({i}, {j}) is invalid for {n} atoms")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InvalidUnitSpec(f"duplicate bond {key}")
            if o <= 0:
                raise InvalidUnitSpec(f"bond ({i}, {j}) has non-positive order {o}")
            seen.add(key)
        if len(_components(n, self.bonds)) != 1:
            raise InvalidUnitSpec("unit bond graph is disconnected")
        for x, y, label in ((self.a1, self.a2, "atom-1/atom-2"), (self.a3, self.a4, "atom-3/atom-4")):
            if (min(x, y), max(x, y)) not in seen:
                raise InvalidUnitSpec(f"junction bond {label} missing from unit bonds")
        nbrs = self.neighbors()
        for role, i in (("atom-1", self.a1), ("atom-4", self.a4)):
            if len(nbrs[i]) != 1:
                raise InvalidUnitSpec(f"overlap atom {role} must have exactly one bond inside the unit")


def _components(n: int, bonds, skip: tuple[int, int] | None = None) -> list[set[int]]:
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for i, j, *_ in bonds:
        if skip is not None and {i, j} == set(skip):
            continue
        nbrs[i].append(j)
        nbrs[j].append(i)
    seen = [False] * n
    comps = []
    for s in range(n):
        if seen[s]:
            continue
        comp = {s}
        seen[s] = True
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for v in nbrs[u]:
                if not seen[v]:
                    seen[v] = True
                    comp.add(v)
                    dq.append(v)
        comps.append(comp)
    return comps


class RotatableBond(NamedTuple):
    """A torsion handle: dihedral ``quad`` measured about bond ``quad[1]-quad[2]``.

    ``moving`` lists the atoms that turn (the side without atom-3).
    """

    quad: tuple[int, int, int, int]
    moving: tuple[int, ...]

    @property
    def bond(self) -> tuple[int, int]:
        return self.quad[1], self.quad[2]


def _pick_neighbor(nbrs: list[int], exclude: int, elements) -> int:
    cands = [k for k in nbrs if k != exclude]
    heavy = [k for k in cands if elements[k] != "H"]
    return min(heavy) if heavy else min(cands)


def rotatable_bond(topo: UnitTopology, i: int, j: int) -> RotatableBond:
    """Torsion handle for bond ``(i, j)``.

    Raises:
        NotRotatable: the bond is absent, not single, in a ring, or one side
            would hold fewer than two atoms.
    """
    order = topo.bond_order(i, j)
    if order is None:
        raise NotRotatable(f"({i}, {j}) is not a bond")
    if order != 1:
        raise NotRotatable(f"bond ({i}, {j}) has order {order}")
    comps = _components(topo.n_atoms, topo.bonds, skip=(i, j))
    if len(comps) != 2:
        raise NotRotatable(f"bond ({i}, {j}) is in a ring")
    if min(len(c) for c in comps) < 2:
        raise NotRotatable(f"bond ({i}, {j}) is terminal")
    fixed = comps[0] if topo.a3 in comps[0] else comps[1]
    moving = comps[1] if fixed is comps[0] else comps[0]
    b, c = (i, j) if i in fixed else (j, i)
    nbrs = topo.neighbors()
    a = _pick_neighbor(nbrs[b], c, topo.elements)
    d = _pick_neighbor(nbrs[c], b, topo.elements)
    return RotatableBond((a, b, c, d), tuple(sorted(moving)))


def list_rotatable_bonds(topo: UnitTopology) -> list[RotatableBond]:
    """Single, acyclic bonds whose cut leaves at least two atoms on each side."""
    out = []
    for i, j, _ in topo.bonds:
        try:
            out.append(rotatable_bond(topo, i, j))
        except NotRotatable:
            continue
    return out


@dataclass(frozen=True, eq=False)
class PolymerGraph:
    """Flat homopolymer chain assembled from per-unit topologies.

    ``unit_atom_index[i][k]`` is the flat index of local atom ``k`` of unit
    ``i``; overlap atoms map to the atom they share with the neighbour.
    """

    units: tuple[UnitTopology, ...]
    unit_atom_index: tuple[np.ndarray, ...]
    elements: tuple[str, ...]
    unit_of_atom: np.ndarray
    local_of_atom: np.ndarray
    bonds: tuple[tuple[int, int, float], ...]
    inter_unit_bonds: tuple[tuple[int, int], ...]
    _neighbors: tuple = field(default=(), repr=False, compare=False)

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def total_atoms(self) -> int:
        return len(self.elements)

    def neighbors(self) -> tuple[tuple[int, ...], ...]:
        return self._neighbors

    def angles(self) -> list[tuple[int, int, int]]:
        """All bonded triples ``(i, j, k)`` with ``j`` central and ``i < k``."""
        out = []
        for j, nb in enumerate(self._neighbors):
            for x in range(len(nb)):
                for y in range(x + 1, len(nb)):
                    out.append((nb[x], j, nb[y]))
        return out

    def heavy_mask(self) -> np.ndarray:
        return np.array([e != "H" for e in self.elements])


def build_polymer_graph(
    unit: UnitTopology,
    n_units: int,
    head: UnitTopology | None = None,
    tail: UnitTopology | None = None,
) -> PolymerGraph:
    """Chain of ``n_units`` copies of ``unit`` with optional terminal overrides.

    Total atom count is ``sum(n_atoms - 2) + 2``: each unit owns all atoms but
    its two borrowed ones, plus the head and tail caps.
    """
    if n_units < 2:
        raise InvalidUnitSpec(f"a chain needs at least 2 units, got {n_units}")
    units = [unit] * n_units
    if head is not None:
        units[0] = head
    if tail is not None:
        units[-1] = tail
    for i in range(n_units - 1):
        left, right = units[i], units[i + 1]
        if left.elements[left.a3] != right.elements[right.a1] or left.elements[left.a4] != right.elements[right.a2]:
            raise InvalidUnitSpec(
                f"overlap atoms of units {i + 1} and {i + 2} have mismatched elements"
            )

    # Flat layout: head cap, then each unit's interior atoms in local order, then tail cap.
    flat_unit: list[int] = []
    flat_local: list[int] = []
    elements: list[str] = []
    own: list[dict[int, int]] = []
    first = units[0]
    flat_unit.append(0)
    flat_local.append(first.a1)
    elements.append(first.elements[first.a1])
    for ui, topo in enumerate(units):
        m = {}
        for k in topo.interior:
            m[k] = len(elements)
            flat_unit.append(ui)
            flat_local.append(k)
            elements.append(topo.elements[k])
        own.append(m)
    last = units[-1]
    tail_index = len(elements)
    flat_unit.append(n_units - 1)
    flat_local.append(last.a4)
    elements.append(last.elements[last.a4])

    index = []
    for ui, topo in enumerate(units):
        idx = np.empty(topo.n_atoms, dtype=np.int64)
        for k, f in own[ui].items():
            idx[k] = f
        idx[topo.a1] = 0 if ui == 0 else own[ui - 1][units[ui - 1].a3]
        idx[topo.a4] = tail_index if ui == n_units - 1 else own[ui + 1][units[ui + 1].a2]
        idx.setflags(write=False)
        index.append(idx)

    bonds: dict[tuple[int, int], float] = {}
    for ui, topo in enumerate(units):
        for i, j, o in topo.bonds:
            a, b = int(index[ui][i]), int(index[ui][j])
            bonds.setdefault((min(a, b), max(a, b)), o)
    junctions = tuple(
        (int(index[ui][units[ui].a3]), int(index[ui + 1][units[ui + 1].a2])) for ui in range(n_units - 1)
    )
    n = len(elements)
    nbrs: list[list[int]] = [[] for _ in range(n)]
    for a, b in bonds:
        nbrs[a].append(b)
        nbrs[b].append(a)
    ua = np.array(flat_unit, dtype=np.int64)
    la = np.array(flat_local, dtype=np.int64)
    ua.setflags(write=False)
    la.setflags(write=False)
    return PolymerGraph(
        units=tuple(units),
        unit_atom_index=tuple(index),
        elements=tuple(elements),
        unit_of_atom=ua,
        local_of_atom=la,
        bonds=tuple((a, b, o) for (a, b), o in sorted(bonds.items())),
        inter_unit_bonds=junctions,
        _neighbors=tuple(tuple(sorted(x)) for x in nbrs),
    )


def expected_atom_count(unit: UnitTopology, n_units: int) -> int:
    return n_units * (unit.n_atoms - 2) + 2
