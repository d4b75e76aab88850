"""Text file formats: polymer specs, conformation files, decomposition and report JSON.

Polymer spec (``#`` starts a comment, blank lines ignored)::

    name styrene
    n_units 10
    [unit]
    atom 0 C
    atom 1 C
    bond 0 1 1
    key atom-1 0
    ...
    [head]          # optional terminal override, same body as [unit]
    [tail]          # optional

Local atom indices are 0-based and must be contiguous.  Conformation files
use 1-based unit indices.  All floats are written with 12 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections import Counter
from dataclasses import dataclass

import jsonschema
import numpy as np

from .conformation import DecompositionResult, PolymerConformation, UnitConformation
from .errors import HashMismatch, InvalidUnitSpec, MalformedRecord, ParseError
from .geometry import RigidTransform
from .topology import ROLES, PolymerGraph, UnitTopology, build_polymer_graph

FORMAT_VERSION = 1
CONF_MAGIC = "POLYFRAME-CONF"
SPEC_SECTIONS = ("unit", "head", "tail")


def fmt(x: float) -> str:
    return format(float(x), ".12g")


def round12(x: float) -> float:
    return float(fmt(x))


# Polymer specs


@dataclass(frozen=True)
class PolymerSpec:
    unit: UnitTopology
    n_units: int
    head: UnitTopology | None = None
    tail: UnitTopology | None = None
    name: str = "polymer"

    def graph(self) -> PolymerGraph:
        return build_polymer_graph(self.unit, self.n_units, self.head, self.tail)


class _SectionBuilder:
    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.atoms: dict[int, str] = {}
        self.bonds: list[tuple[int, int, float]] = []
        self.keys: dict[str, int] = {}

    def topology(self, path) -> UnitTopology:
        n = len(self.atoms)
        if sorted(self.atoms) != list(range(n)):
            raise ParseError(f"[{self.name}] atom indices must be 0..{n - 1} without gaps", path, self.line)
        try:
            return UnitTopology(
                elements=tuple(self.atoms[i] for i in range(n)),
                bonds=tuple(self.bonds),
                key_atoms=self.keys,
                name=self.name,
            )
        except InvalidUnitSpec as exc:
            raise InvalidUnitSpec(f"{path}:{self.line}: [{self.name}] {exc}") from None


def parse_polymer_spec_text(text: str, path: str | None = None) -> PolymerSpec:
    name = "polymer"
    n_units = None
    sections: dict[str, _SectionBuilder] = {}
    cur: _SectionBuilder | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or line[1:-1].strip() not in SPEC_SECTIONS:
                raise ParseError(f"unknown section {line!r}; expected one of {SPEC_SECTIONS}", path, lineno)
            sec = line[1:-1].strip()
            if sec in sections:
                raise ParseError(f"duplicate section [{sec}]", path, lineno)
            cur = sections[sec] = _SectionBuilder(sec, lineno)
            continue
        tok = line.split()
        kw, args = tok[0], tok[1:]
        try:
            if kw == "name" and cur is None:
                if len(args) != 1:
                    raise ValueError("name takes one word")
                name = args[0]
            elif kw == "n_units" and cur is None:
                if len(args) != 1:
                    raise ValueError("n_units takes one integer")
                n_units = int(args[0])
            elif cur is None:
                raise ValueError(f"{kw!r} is not allowed outside a section")
            elif kw == "atom":
                if len(args) != 2:
                    raise ValueError("atom takes an index and an element")
                i = int(args[0])
                if i in cur.atoms:
                    raise ValueError(f"atom {i} defined twice")
                cur.atoms[i] = args[1]
            elif kw == "bond":
                if len(args) not in (2, 3):
                    raise ValueError("bond takes two indices and an optional order")
                order = float(args[2]) if len(args) == 3 else 1.0
                cur.bonds.append((int(args[0]), int(args[1]), order))
            elif kw == "key":
                if len(args) != 2 or args[0] not in ROLES:
                    raise ValueError(f"key takes a role from {ROLES} and an index")
                if args[0] in cur.keys:
                    raise ValueError(f"role {args[0]} assigned twice")
                cur.keys[args[0]] = int(args[1])
            else:
                raise ValueError(f"unknown keyword {kw!r}")
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    if "unit" not in sections:
        raise ParseError("missing [unit] section", path)
    if n_units is None:
        raise ParseError("missing n_units", path)
    topos = {k: s.topology(path) for k, s in sections.items()}
    spec = PolymerSpec(topos["unit"], n_units, topos.get("head"), topos.get("tail"), name)
    spec.graph()  # surface InvalidUnitSpec early
    return spec


def read_polymer_spec(path) -> PolymerSpec:
    with open(path) as fh:
        return parse_polymer_spec_text(fh.read(), str(path))


def parse_polymer_spec(path) -> PolymerGraph:
    return read_polymer_spec(path).graph()


def _section_text(sec: str, topo: UnitTopology) -> list[str]:
    lines = [f"[{sec}]"]
    lines += [f"atom {i} {e}" for i, e in enumerate(topo.elements)]
    lines += [f"bond {i} {j} {fmt(o)}" for i, j, o in topo.bonds]
    lines += [f"key {r} {topo.key_atoms[r]}" for r in ROLES]
    return lines


def serialize_polymer_spec(spec: PolymerSpec) -> str:
    """Canonical text; also the input of :func:`spec_hash`."""
    lines = [f"name {spec.name}", f"n_units {spec.n_units}"]
    lines += _section_text("unit", spec.unit)
    if spec.head is not None:
        lines += _section_text("head", spec.head)
    if spec.tail is not None:
        lines += _section_text("tail", spec.tail)
    return "\n".join(lines) + "\n"


def spec_from_graph(graph: PolymerGraph, name: str = "polymer") -> PolymerSpec:
    counts = Counter(graph.units[1:-1] or graph.units[:1])
    unit = counts.most_common(1)[0][0]
    head = graph.units[0] if graph.units[0] != unit else None
    tail = graph.units[-1] if graph.units[-1] != unit else None
    return PolymerSpec(unit, graph.n_units, head, tail, name)


def spec_hash(spec_or_graph) -> str:
    """SHA-256 of the canonical spec text, independent of the chain name."""
    spec = spec_or_graph if isinstance(spec_or_graph, PolymerSpec) else spec_from_graph(spec_or_graph)
    text = serialize_polymer_spec(PolymerSpec(spec.unit, spec.n_units, spec.head, spec.tail, "polymer"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_polymer_spec(path, spec: PolymerSpec) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_polymer_spec(spec))


# Conformation files


def format_conformations(confs, graph: PolymerGraph) -> str:
    confs = list(confs)
    out = [
        f"{CONF_MAGIC} {FORMAT_VERSION}",
        f"spec_hash {spec_hash(graph)}",
        f"n_units {graph.n_units}",
        f"n_atoms {graph.total_atoms}",
        f"n_conformations {len(confs)}",
    ]
    for k, conf in enumerate(confs, 1):
        if conf.n_atoms != graph.total_atoms:
            raise MalformedRecord(f"conformation {k} has {conf.n_atoms} atoms, graph expects {graph.total_atoms}")
        out.append(f"CONF {k}")
        for a in range(graph.total_atoms):
            x, y, z = conf.coords[a]
            out.append(
                f"{graph.unit_of_atom[a] + 1} {graph.local_of_atom[a]} {graph.elements[a]} {fmt(x)} {fmt(y)} {fmt(z)}"
            )
        out.append("END")
    return "\n".join(out) + "\n"


def write_conformations(path, confs, graph: PolymerGraph) -> None:
    text = format_conformations(confs, graph)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _header(lines, key, path):
    lineno, line = next(lines, (None, None))
    tok = line.split() if line is not None else []
    if len(tok) != 2 or tok[0] != key:
        raise MalformedRecord(f"expected '{key} <value>'", path, lineno)
    return tok[1], lineno


def parse_conformations_text(text: str, graph: PolymerGraph, path: str | None = None) -> list[PolymerConformation]:
    lines = iter((i, l.strip()) for i, l in enumerate(text.splitlines(), 1) if l.strip())
    version, lineno = _header(lines, CONF_MAGIC, path)
    if version != str(FORMAT_VERSION):
        raise MalformedRecord(f"unsupported format version {version}", path, lineno)
    h, lineno = _header(lines, "spec_hash", path)
    expected = spec_hash(graph)
    if h != expected:
        raise HashMismatch(
            f"{path or '<text>'}:{lineno}: spec hash {h[:12]}... does not match the polymer spec ({expected[:12]}...)"
        )
    try:
        nu, lineno = _header(lines, "n_units", path)
        if int(nu) != graph.n_units:
            raise MalformedRecord(f"n_units {nu} but spec has {graph.n_units}", path, lineno)
        na, lineno = _header(lines, "n_atoms", path)
        if int(na) != graph.total_atoms:
            raise MalformedRecord(f"n_atoms {na} but spec has {graph.total_atoms}", path, lineno)
        nc, lineno = _header(lines, "n_conformations", path)
        n_conf = int(nc)
    except ValueError:
        raise MalformedRecord("header value is not an integer", path, lineno) from None
    n = graph.total_atoms
    out = []
    for k in range(1, n_conf + 1):
        lineno, line = next(lines, (None, None))
        if line != f"CONF {k}":
            raise MalformedRecord(f"expected 'CONF {k}'", path, lineno)
        coords = np.empty((n, 3))
        for a in range(n):
            lineno, line = next(lines, (None, None))
            tok = line.split() if line is not None else []
            if len(tok) != 6:
                raise MalformedRecord("atom record needs: unit local element x y z", path, lineno)
            try:
                unit, local = int(tok[0]), int(tok[1])
                xyz = [float(v) for v in tok[3:]]
            except ValueError:
                raise MalformedRecord("non-numeric field in atom record", path, lineno) from None
            if (unit, local, tok[2]) != (graph.unit_of_atom[a] + 1, graph.local_of_atom[a], graph.elements[a]):
                raise MalformedRecord(
                    f"atom {a + 1} should be unit {graph.unit_of_atom[a] + 1} local {graph.local_of_atom[a]} "
                    f"{graph.elements[a]}, found {unit} {local} {tok[2]}",
                    path,
                    lineno,
                )
            if not np.all(np.isfinite(xyz)):
                raise MalformedRecord("non-finite coordinate", path, lineno)
            coords[a] = xyz
        lineno, line = next(lines, (None, None))
        if line != "END":
            raise MalformedRecord("expected END", path, lineno)
        out.append(PolymerConformation.from_coords(coords, graph))
    lineno, line = next(lines, (None, None))
    if line is not None:
        raise MalformedRecord("trailing content after last conformation", path, lineno)
    return out


def read_conformations(path, graph: PolymerGraph) -> list[PolymerConformation]:
    with open(path) as fh:
        return parse_conformations_text(fh.read(), graph, str(path))


# JSON documents

_MATRIX3 = {"type": "array", "minItems": 3, "maxItems": 3,
            "items": {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}}}
_VEC3 = {"type": "array", "minItems": 3, "maxItems": 3, "items": {"type": "number"}}

DECOMPOSITION_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "spec_hash", "conformations"],
    "properties": {
        "format": {"const": "polyframe-decomposition"},
        "version": {"const": FORMAT_VERSION},
        "spec_hash": {"type": "string"},
        "conformations": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["unit", "coords", "rotation", "translation"],
                    "properties": {
                        "unit": {"type": "integer", "minimum": 1},
                        "coords": {"type": "array", "items": _VEC3},
                        "rotation": _MATRIX3,
                        "translation": _VEC3,
                    },
                },
            },
        },
    },
}

_METRIC_MAP = {"type": "object", "additionalProperties": {"type": "number"}}

REPORT_SCHEMA = {
    "type": "object",
    "required": ["format", "version", "tool_version", "seed", "delta", "oracle", "aggregate", "metrics", "polymers", "summary"],
    "properties": {
        "format": {"const": "polyframe-report"},
        "version": {"const": FORMAT_VERSION},
        "tool_version": {"type": "string"},
        "seed": {"type": "integer"},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "oracle": {"type": "string"},
        "aggregate": {"enum": ["polymer", "conformation"]},
        "metrics": {"type": "array", "items": {"type": "string"}},
        "polymers": {
            "type": "array",
            "items": {"type": "object", "required": ["label", "values"],
                      "properties": {"label": {"type": "string"}, "values": _METRIC_MAP}},
        },
        "summary": {"type": "object", "required": ["mean", "median"],
                    "properties": {"mean": _METRIC_MAP, "median": _METRIC_MAP}},
    },
}


def _r(a):
    return [_r(x) for x in a] if isinstance(a, (list, tuple, np.ndarray)) else round12(a)


def decomposition_to_dict(results, graph: PolymerGraph) -> dict:
    return {
        "format": "polyframe-decomposition",
        "version": FORMAT_VERSION,
        "spec_hash": spec_hash(graph),
        "conformations": [
            [
                {
                    "unit": u.unit_index + 1,
                    "coords": _r(u.coords),
                    "rotation": _r(f.rotation),
                    "translation": _r(f.translation),
                }
                for u, f in zip(res.units, res.frames)
            ]
            for res in results
        ],
    }


def decomposition_from_dict(doc: dict, graph: PolymerGraph, path=None) -> list[DecompositionResult]:
    try:
        jsonschema.validate(doc, DECOMPOSITION_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise MalformedRecord(f"decomposition document: {exc.message}", path) from None
    if doc["spec_hash"] != spec_hash(graph):
        raise HashMismatch(f"{path or '<document>'}: decomposition spec hash does not match the polymer spec")
    out = []
    for k, entries in enumerate(doc["conformations"], 1):
        if [e["unit"] for e in entries] != list(range(1, graph.n_units + 1)):
            raise MalformedRecord(f"conformation {k}: units must be listed 1..{graph.n_units}", path)
        units, frames = [], []
        for e, topo in zip(entries, graph.units):
            if len(e["coords"]) != topo.n_atoms:
                raise MalformedRecord(
                    f"conformation {k} unit {e['unit']}: {len(e['coords'])} atoms, expected {topo.n_atoms}", path
                )
            units.append(UnitConformation(e["unit"] - 1, e["coords"]))
            frames.append(RigidTransform(np.array(e["rotation"], dtype=float), np.array(e["translation"], dtype=float)))
        out.append(DecompositionResult(tuple(units), tuple(frames)))
    return out


def write_json(path, doc: dict) -> None:
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if path is None or path == "-":
        import sys

        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from None


def report_to_dict(report, seed: int, tool_version: str) -> dict:
    doc = {
        "format": "polyframe-report",
        "version": FORMAT_VERSION,
        "tool_version": tool_version,
        "seed": int(seed),
        "delta": round12(report.delta),
        "oracle": report.oracle,
        "aggregate": report.aggregate,
        "metrics": list(report.names),
        "polymers": [
            {"label": label, "values": {k: round12(v) for k, v in values.items()}}
            for label, values in zip(report.labels, report.per_polymer)
        ],
        "summary": {
            "mean": {k: round12(v) for k, v in report.mean.items()},
            "median": {k: round12(v) for k, v in report.median.items()},
        },
    }
    jsonschema.validate(doc, REPORT_SCHEMA)
    return doc
