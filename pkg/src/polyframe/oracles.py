"""Pluggable stand-ins for the learned components.

Every neural network of the generative model sits behind one of three small
interfaces.  The toy implementations here are deterministic and pure; the
ground-truth ones replay a known answer and are used to check that the
sampling plumbing converges.  ``Subprocess*`` adapters forward calls to an
external program speaking line-delimited JSON.
"""

from __future__ import annotations

import json
import math
import subprocess
import threading
from typing import Protocol, Sequence

import numpy as np

from .builders import closest_junction_rotation
from .conformation import UnitConformation, measure_torsions
from .errors import OracleFailure
from .geometry import wrap_angle
from .topology import PolymerGraph, list_rotatable_bonds


class EncoderOracle(Protocol):
    def embed(self, graph: PolymerGraph, units: Sequence[UnitConformation | None]) -> np.ndarray:
        """Per-unit embedding; ``None`` marks a unit whose coordinates are unknown."""

    def encode(self, x: np.ndarray) -> np.ndarray: ...

    def decode(self, e: np.ndarray) -> np.ndarray: ...


class TorsionDenoiser(Protocol):
    def __call__(self, torsions: np.ndarray, t: int, sigma: float, condition: np.ndarray, unit_index: int) -> np.ndarray:
        """Predicted unit-variance noise for the noisy torsions."""


class RotationDenoiser(Protocol):
    def __call__(
        self,
        rotations: np.ndarray,
        translations: np.ndarray,
        t: int,
        condition: np.ndarray,
        units: Sequence[UnitConformation],
        graph: PolymerGraph,
    ) -> np.ndarray:
        """Predicted clean rotations, shape ``(n_units, 3, 3)``."""


class ToyEncoder:
    """Hand-made unit features pushed through fixed random projections."""

    n_features = 7

    def __init__(self, dim: int = 32, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.dim = dim
        self.w_embed = rng.standard_normal((self.n_features, dim)) / math.sqrt(self.n_features)
        self.w_decode = rng.standard_normal((dim, dim)) / math.sqrt(dim)

    def features(self, graph: PolymerGraph, units) -> np.ndarray:
        n = graph.n_units
        rows = []
        for i, topo in enumerate(graph.units):
            u = units[i]
            row = [
                topo.n_atoms / 10.0,
                len(topo.bonds) / 10.0,
                len(list_rotatable_bonds(topo)) / 5.0,
                i / max(n - 1, 1),
                0.0,
                0.0,
                0.0,
            ]
            if u is not None:
                c = u.coords
                row[4] = 1.0
                row[5] = float(np.sqrt(np.mean(np.sum((c - c.mean(axis=0)) ** 2, axis=1))))
                bonds = list_rotatable_bonds(topo)
                if bonds:
                    row[6] = float(np.mean(np.cos(measure_torsions(c, bonds))))
            rows.append(row)
        return np.array(rows)

    def embed(self, graph, units):
        return np.tanh(self.features(graph, units) @ self.w_embed)

    def encode(self, x):
        x = np.asarray(x, dtype=float)
        return x + x.mean(axis=0, keepdims=True)

    def decode(self, e):
        return np.tanh(np.asarray(e, dtype=float) @ self.w_decode)


class GroundTruthTorsionDenoiser:
    """Returns the exact noise relative to known torsions: ``wrap(phi - phi*) / sigma``."""

    def __init__(self, targets):
        self.targets = [np.atleast_1d(np.asarray(x, dtype=float)) for x in targets]

    @classmethod
    def from_units(cls, std_units, graph: PolymerGraph):
        return cls(
            measure_torsions(u.coords, list_rotatable_bonds(topo)) for u, topo in zip(std_units, graph.units)
        )

    def __call__(self, torsions, t, sigma, condition, unit_index):
        return wrap_angle(np.asarray(torsions) - self.targets[unit_index]) / sigma


class StaggeredTorsionDenoiser:
    """Pulls every torsion towards the nearest staggered minimum."""

    def __init__(self, minima=(math.pi, math.pi / 3, -math.pi / 3)):
        self.minima = np.asarray(minima, dtype=float)

    def __call__(self, torsions, t, sigma, condition, unit_index):
        phi = np.asarray(torsions, dtype=float)
        d = wrap_angle(phi[:, None] - self.minima[None, :])
        d = np.atleast_2d(d)
        nearest = d[np.arange(len(phi)), np.argmin(np.abs(d), axis=1)]
        return nearest / sigma


class GroundTruthRotationDenoiser:
    def __init__(self, rotations):
        self.rotations = np.stack([np.asarray(r, dtype=float) for r in rotations])

    def __call__(self, rotations, translations, t, condition, units, graph):
        return self.rotations.copy()


class IdentityRotationDenoiser:
    def __call__(self, rotations, translations, t, condition, units, graph):
        return np.repeat(np.eye(3)[None], len(rotations), axis=0)


class ContinuityRotationDenoiser:
    """Snaps each unit so its atom-2 meets the previous unit's atom-4.

    Unit 1 keeps its current rotation; every later unit takes the
    junction-consistent rotation closest to its current one.
    """

    def __call__(self, rotations, translations, t, condition, units, graph):
        out = [np.asarray(rotations[0], dtype=float)]
        placed = units[0].coords @ out[0].T
        for i in range(1, len(units)):
            prev = graph.units[i - 1]
            topo = graph.units[i]
            r = closest_junction_rotation(placed[prev.a3], placed[prev.a4], units[i], topo, rotations[i])
            out.append(r)
            rotated = units[i].coords @ r.T
            placed = rotated + (placed[prev.a3] - rotated[topo.a1])
        return np.stack(out)


class _JsonLineProcess:
    """One long-lived child process; one JSON request line, one JSON reply line."""

    def __init__(self, command: Sequence[str] | str):
        self.command = command
        self._proc = None
        self._lock = threading.Lock()

    def _ensure(self):
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                shell=isinstance(self.command, str),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self._proc

    def request(self, payload: dict) -> dict:
        with self._lock:
            proc = self._ensure()
            try:
                proc.stdin.write(json.dumps(payload) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise OracleFailure(f"external oracle {self.command!r} died: {exc}") from exc
            if not line:
                raise OracleFailure(f"external oracle {self.command!r} closed its output")
            try:
                return json.loads(line)
            except json.JSONDecodeError as exc:
                raise OracleFailure(f"external oracle sent invalid JSON: {exc}") from exc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


class SubprocessTorsionDenoiser(_JsonLineProcess):
    """Request: ``{"kind": "torsion", "t", "sigma", "unit_index", "torsions", "embedding"}``.

    Reply: ``{"noise": [...]}``.
    """

    def __call__(self, torsions, t, sigma, condition, unit_index):
        reply = self.request(
            {
                "kind": "torsion",
                "t": int(t),
                "sigma": float(sigma),
                "unit_index": int(unit_index),
                "torsions": np.asarray(torsions, dtype=float).tolist(),
                "embedding": np.asarray(condition, dtype=float).tolist(),
            }
        )
        try:
            return np.asarray(reply["noise"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleFailure(f"bad torsion reply: {exc}") from exc


class SubprocessRotationDenoiser(_JsonLineProcess):
    """Request: ``{"kind": "rotation", "t", "rotations", "translations", "units", "embedding"}``.

    ``units`` carries the standard-pose coordinates of each unit.
    Reply: ``{"rotations": [[[...]]]}``.
    """

    def __call__(self, rotations, translations, t, condition, units, graph):
        reply = self.request(
            {
                "kind": "rotation",
                "t": int(t),
                "rotations": np.asarray(rotations, dtype=float).tolist(),
                "translations": np.asarray(translations, dtype=float).tolist(),
                "units": [u.coords.tolist() for u in units],
                "embedding": np.asarray(condition, dtype=float).tolist(),
            }
        )
        try:
            return np.asarray(reply["rotations"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleFailure(f"bad rotation reply: {exc}") from exc
