"""Toy force field and energy oracles.

    E = sum_bonds k_b (l - l0)^2 + sum_angles k_a (theta - theta0)^2
        + sum_{pairs >= 4 bonds apart} 4 eps ((sigma/r)^12 - (sigma/r)^6)

with ``l0`` from covalent radii and ``theta0`` from the hybridization of the
central atom.  Energies from different oracles are not comparable, so every
oracle carries an ``identifier``.
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .conformation import PolymerConformation
from .errors import OracleFailure
from .templates import ideal_angle, ideal_bond_length
from .topology import PolymerGraph


@dataclass(frozen=True)
class ToyForceField:
    k_bond: float = 300.0
    k_angle: float = 50.0
    epsilon: float = 0.1
    sigma: float = 3.4
    min_separation: int = 4


@dataclass(frozen=True, eq=False)
class EnergyTerms:
    bond_i: np.ndarray
    bond_j: np.ndarray
    bond_l0: np.ndarray
    angle_i: np.ndarray
    angle_j: np.ndarray
    angle_k: np.ndarray
    angle_theta0: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray


@lru_cache(maxsize=64)
def energy_terms(graph: PolymerGraph) -> EnergyTerms:
    el = graph.elements
    bonds = graph.bonds
    bi = np.array([b[0] for b in bonds], dtype=np.int64)
    bj = np.array([b[1] for b in bonds], dtype=np.int64)
    l0 = np.array([ideal_bond_length(el[i], el[j], o) for i, j, o in bonds], dtype=float)
    orders: list[list[float]] = [[] for _ in range(graph.total_atoms)]
    for i, j, o in bonds:
        orders[i].append(o)
        orders[j].append(o)
    triples = graph.angles()
    ai = np.array([t[0] for t in triples], dtype=np.int64)
    aj = np.array([t[1] for t in triples], dtype=np.int64)
    ak = np.array([t[2] for t in triples], dtype=np.int64)
    th0 = np.array([ideal_angle(orders[t[1]]) for t in triples], dtype=float)
    nbrs = graph.neighbors()
    indptr = np.zeros(graph.total_atoms + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(x) for x in nbrs])
    indices = np.array([j for x in nbrs for j in x], dtype=np.int64)
    return EnergyTerms(bi, bj, l0, ai, aj, ak, th0, indptr, indices)


def toy_energy(conf: PolymerConformation, graph: PolymerGraph, ff: ToyForceField = ToyForceField(), backend=None) -> float:
    k = backend if backend is not None else kernels
    terms = energy_terms(graph)
    x = np.ascontiguousarray(conf.coords, dtype=float)
    e = k.bond_energy(x, terms.bond_i, terms.bond_j, terms.bond_l0, ff.k_bond)
    e += k.angle_energy(x, terms.angle_i, terms.angle_j, terms.angle_k, terms.angle_theta0, ff.k_angle)
    e += k.lj_energy(x, terms.indptr, terms.indices, ff.epsilon, ff.sigma, ff.min_separation)
    return float(e)


class ToyEnergyOracle:
    identifier = "toy-ff-v1"

    def __init__(self, ff: ToyForceField = ToyForceField()):
        self.ff = ff

    def __call__(self, conf: PolymerConformation, graph: PolymerGraph) -> float:
        return toy_energy(conf, graph, self.ff)


class ExternalEnergyOracle:
    """Runs ``command <conformation file>`` once per conformation.

    The program must print exactly one real number on standard output.
    """

    def __init__(self, command: str, timeout: float = 600.0):
        self.command = command
        self.timeout = timeout
        self.identifier = f"external:{command}"

    def __call__(self, conf: PolymerConformation, graph: PolymerGraph) -> float:
        from .io import write_conformations

        fd, path = tempfile.mkstemp(suffix=".conf")
        os.close(fd)
        try:
            write_conformations(path, [conf], graph)
            argv = shlex.split(self.command) + [path]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True, timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise OracleFailure(f"energy command failed to run: {exc}") from exc
        finally:
            os.unlink(path)
        if proc.returncode != 0:
            raise OracleFailure(f"energy command exited with {proc.returncode}: {proc.stderr.strip()}")
        tokens = proc.stdout.split()
        if len(tokens) != 1:
            raise OracleFailure(f"energy command must print one number, printed {len(tokens)} tokens")
        try:
            value = float(tokens[0])
        except ValueError:
            raise OracleFailure(f"energy command printed a non-number: {tokens[0]!r}") from None
        if not np.isfinite(value):
            raise OracleFailure("energy command printed a non-finite value")
        return value


def energy_oracle_from_flag(flag: str):
    if flag == "toy":
        return ToyEnergyOracle()
    if flag.startswith("external:") and len(flag) > len("external:"):
        return ExternalEnergyOracle(flag[len("external:") :])
    raise ValueError(f"--energy must be 'toy' or 'external:<cmd>', got {flag!r}")
