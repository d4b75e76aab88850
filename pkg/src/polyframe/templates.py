"""Idealized unit geometry from topology alone.

Bond lengths are sums of covalent radii scaled by bond order; bond angles come
from a hybridization heuristic on the central atom.  Acyclic units are placed
exactly by walking the bond tree (internal coordinates); units with rings are
relaxed with a bonded-term least-squares fit.
"""

from __future__ import annotations

import math

import numpy as np

from .conformation import UnitConformation, standardize
from .errors import DegenerateFrame, TemplateUnavailable
from .topology import UnitTopology

# Single-bond covalent radii in Angstrom (Cordero et al. 2008, sp3 carbon).
COVALENT_RADII = {
    "H": 0.31,
    "B": 0.84,
    "C": 0.76,
    "N": 0.71,
    "O": 0.66,
    "F": 0.57,
    "Si": 1.11,
    "P": 1.07,
    "S": 1.05,
    "Cl": 1.02,
    "Se": 1.20,
    "Br": 1.20,
    "I": 1.39,
}
ORDER_SCALE = {1.0: 1.0, 1.5: 0.93, 2.0: 0.87, 3.0: 0.78}

TETRAHEDRAL = math.acos(-1.0 / 3.0)
TRIGONAL = 2.0 * math.pi / 3.0
LINEAR = math.pi


def covalent_radius(element: str) -> float:
    try:
        return COVALENT_RADII[element]
    except KeyError:
        raise TemplateUnavailable(f"no covalent radius for element {element!r}") from None


def ideal_bond_length(e1: str, e2: str, order: float = 1.0) -> float:
    return (covalent_radius(e1) + covalent_radius(e2)) * ORDER_SCALE.get(float(order), 1.0)


def ideal_angle(orders) -> float:
    """Equilibrium angle at an atom given the orders of its bonds."""
    orders = [float(o) for o in orders]
    if any(o >= 3 for o in orders) or sum(1 for o in orders if o >= 2) >= 2:
        return LINEAR
    if any(o > 1 for o in orders):
        return TRIGONAL
    return TETRAHEDRAL


def _orders_at(topo: UnitTopology) -> list[list[float]]:
    out: list[list[float]] = [[] for _ in range(topo.n_atoms)]
    for i, j, o in topo.bonds:
        out[i].append(o)
        out[j].append(o)
    return out


def _has_ring(topo: UnitTopology) -> bool:
    return len(topo.bonds) > topo.n_atoms - 1


def _place(parent_pos, grand_pos, great_pos, length, angle, torsion):
    """Position of a new atom from bond length, bond angle and dihedral."""
    bc = parent_pos - grand_pos
    bc /= np.linalg.norm(bc)
    n = np.cross(grand_pos - great_pos, bc)
    if np.linalg.norm(n) < 1e-8:
        trial = np.array([1.0, 0.0, 0.0]) if abs(bc[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        n = np.cross(trial, bc)
    n /= np.linalg.norm(n)
    m = np.cross(n, bc)
    d2 = np.array([-length * math.cos(angle), length * math.sin(angle) * math.cos(torsion), length * math.sin(angle) * math.sin(torsion)])
    return parent_pos + d2[0] * bc + d2[1] * m + d2[2] * n


def _tree_template(topo: UnitTopology) -> np.ndarray:
    nbrs = topo.neighbors()
    angles = [ideal_angle(o) for o in _orders_at(topo)]
    n = topo.n_atoms
    pos = np.zeros((n, 3))
    placed = [False] * n
    parent = [-1] * n

    def length(i, j):
        return ideal_bond_length(topo.elements[i], topo.elements[j], topo.bond_order(i, j))

    def reference(g, p):
        # A placed atom bonded to g (not p) fixes the dihedral zero.
        for x in nbrs[g]:
            if x != p and placed[x]:
                return pos[x]
        return pos[g] + np.array([0.0, 0.0, 1.0]) + 0.1 * (pos[g] - pos[p])

    root = topo.a3
    placed[root] = True
    queue = [root]
    k = 0
    while k < len(queue):
        p = queue[k]
        k += 1
        children = [c for c in nbrs[p] if not placed[c]]
        if not children:
            continue
        g = parent[p]
        if g == -1:
            first = children.pop(0)
            pos[first] = pos[p] + np.array([length(p, first), 0.0, 0.0])
            placed[first] = True
            parent[first] = p
            queue.append(first)
            g = first
        slots = max(len(nbrs[p]) - 1, 1)
        great = reference(g, p)
        for j, c in enumerate(children):
            # Substituents are spread evenly in dihedral about the g-p bond.
            torsion = math.pi + j * 2.0 * math.pi / slots
            pos[c] = _place(pos[p], pos[g], great, length(p, c), angles[p], torsion)
            placed[c] = True
            parent[c] = p
            queue.append(c)
    return pos


def _relaxed_template(topo: UnitTopology, seed: int = 0) -> np.ndarray:
    from scipy.optimize import least_squares

    nbrs = topo.neighbors()
    orders = _orders_at(topo)
    bonds = [(i, j, ideal_bond_length(topo.elements[i], topo.elements[j], o)) for i, j, o in topo.bonds]
    triples = []
    for j, nb in enumerate(nbrs):
        th = ideal_angle(orders[j])
        for x in range(len(nb)):
            for y in range(x + 1, len(nb)):
                i, k = nb[x], nb[y]
                li = ideal_bond_length(topo.elements[i], topo.elements[j], topo.bond_order(i, j))
                lk = ideal_bond_length(topo.elements[k], topo.elements[j], topo.bond_order(k, j))
                # 1-3 distance fixes the angle by the law of cosines.
                triples.append((i, k, math.sqrt(li * li + lk * lk - 2 * li * lk * math.cos(th))))
    restraints = bonds + triples
    rng = np.random.default_rng(seed)
    x0 = rng.normal(scale=1.5, size=(topo.n_atoms, 3))

    def resid(x):
        p = x.reshape(-1, 3)
        return np.array([np.linalg.norm(p[i] - p[j]) - d for i, j, d in restraints])

    best = None
    for attempt in range(8):
        sol = least_squares(resid, x0.ravel(), xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost:
            best = sol
        if sol.cost < 1e-6:
            break
        x0 = rng.normal(scale=1.5, size=(topo.n_atoms, 3))
    return best.x.reshape(-1, 3)


def ideal_template(topo: UnitTopology) -> UnitConformation:
    """Standard-pose unit with idealized bond lengths and angles."""
    pos = _relaxed_template(topo) if _has_ring(topo) else _tree_template(topo)
    try:
        return standardize(UnitConformation(0, pos), topo)[0]
    except DegenerateFrame as exc:
        raise TemplateUnavailable(f"idealized template has a degenerate frame: {exc}") from exc
