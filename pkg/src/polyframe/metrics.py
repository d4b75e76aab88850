"""Set-level matching metrics between generated and reference conformations.

For a pairwise cost ``d(C_ref, C_gen)``:

    recall    = mean over ref of  min over gen  d
    precision = mean over gen of  min over ref  d

S-MAT uses aligned RMSD, E-MAT the absolute energy difference.  Coverage
counts members whose best aligned RMSD is within ``delta``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conformation import PolymerConformation
from .errors import GraphMismatch
from .geometry import kabsch_align
from .topology import PolymerGraph

DEFAULT_DELTA = 25.0
METRICS = ("S-MAT-R", "S-MAT-P", "E-MAT-R", "E-MAT-P", "S-COV-R", "S-COV-P")


def graphs_match(a: PolymerGraph, b: PolymerGraph) -> bool:
    return a is b or (a.elements == b.elements and a.bonds == b.bonds)


@dataclass(frozen=True, eq=False)
class ConformationSet:
    members: tuple[PolymerConformation, ...]
    graph: PolymerGraph
    role: str = "generated"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError(f"{self.role} conformation set is empty")
        for m in self.members:
            if m.n_atoms != self.graph.total_atoms:
                raise GraphMismatch(
                    f"{self.role} member has {m.n_atoms} atoms, graph expects {self.graph.total_atoms}"
                )

    def __len__(self):
        return len(self.members)


def _check_pair(gen: ConformationSet, ref: ConformationSet) -> None:
    if not graphs_match(gen.graph, ref.graph):
        raise GraphMismatch("generated and reference sets describe different polymers")


def rmsd_matrix(gen: ConformationSet, ref: ConformationSet, heavy_only: bool = False) -> np.ndarray:
    """``out[i, j]`` is the aligned RMSD between ``ref[i]`` and ``gen[j]``."""
    _check_pair(gen, ref)
    mask = ref.graph.heavy_mask() if heavy_only else slice(None)
    out = np.empty((len(ref), len(gen)))
    for i, r in enumerate(ref.members):
        for j, g in enumerate(gen.members):
            out[i, j] = kabsch_align(g.coords[mask], r.coords[mask]).rmsd
    return out


def energy_matrix(gen: ConformationSet, ref: ConformationSet, oracle) -> np.ndarray:
    _check_pair(gen, ref)
    e_ref = np.array([oracle(c, ref.graph) for c in ref.members], dtype=float)
    e_gen = np.array([oracle(c, gen.graph) for c in gen.members], dtype=float)
    return np.abs(e_ref[:, None] - e_gen[None, :])


def match_from_matrix(cost: np.ndarray) -> tuple[float, float]:
    return float(np.mean(cost.min(axis=1))), float(np.mean(cost.min(axis=0)))


def coverage_from_matrix(cost: np.ndarray, delta: float) -> tuple[float, float]:
    if not delta > 0:
        raise ValueError("delta must be positive")
    return float(np.mean(cost.min(axis=1) <= delta)), float(np.mean(cost.min(axis=0) <= delta))


def s_mat(gen: ConformationSet, ref: ConformationSet, heavy_only: bool = False) -> tuple[float, float]:
    return match_from_matrix(rmsd_matrix(gen, ref, heavy_only))


def e_mat(gen: ConformationSet, ref: ConformationSet, oracle) -> tuple[float, float]:
    return match_from_matrix(energy_matrix(gen, ref, oracle))


def s_cov(gen: ConformationSet, ref: ConformationSet, delta: float = DEFAULT_DELTA, heavy_only: bool = False) -> tuple[float, float]:
    return coverage_from_matrix(rmsd_matrix(gen, ref, heavy_only), delta)


@dataclass
class PolymerMetrics:
    values: dict[str, float]
    # Per-member best costs, for per-conformation aggregation.
    per_member: dict[str, list[float]] = field(default_factory=dict)


def evaluate_pair(gen: ConformationSet, ref: ConformationSet, oracle, delta: float = DEFAULT_DELTA,
                  coverage: bool = False, heavy_only: bool = False) -> PolymerMetrics:
    s = rmsd_matrix(gen, ref, heavy_only)
    e = energy_matrix(gen, ref, oracle)
    values = {}
    values["S-MAT-R"], values["S-MAT-P"] = match_from_matrix(s)
    values["E-MAT-R"], values["E-MAT-P"] = match_from_matrix(e)
    per = {
        "S-MAT-R": s.min(axis=1).tolist(),
        "S-MAT-P": s.min(axis=0).tolist(),
        "E-MAT-R": e.min(axis=1).tolist(),
        "E-MAT-P": e.min(axis=0).tolist(),
    }
    if coverage:
        values["S-COV-R"], values["S-COV-P"] = coverage_from_matrix(s, delta)
        per["S-COV-R"] = (s.min(axis=1) <= delta).astype(float).tolist()
        per["S-COV-P"] = (s.min(axis=0) <= delta).astype(float).tolist()
    return PolymerMetrics(values, per)


@dataclass
class MetricReport:
    names: list[str]
    per_polymer: list[dict[str, float]]
    mean: dict[str, float]
    median: dict[str, float]
    delta: float
    oracle: str
    aggregate: str = "polymer"
    labels: list[str] = field(default_factory=list)


def summarize(values) -> tuple[float, float]:
    """Mean and median; an even count takes the midpoint of the two middle values."""
    v = np.asarray(values, dtype=float)
    return float(np.mean(v)), float(np.median(v))


def _evaluate_one(args):
    gen, ref, oracle, delta, coverage, heavy_only = args
    return evaluate_pair(gen, ref, oracle, delta, coverage, heavy_only)


def evaluate_corpus(
    pairs,
    oracle,
    delta: float = DEFAULT_DELTA,
    coverage: bool = False,
    heavy_only: bool = False,
    aggregate: str = "polymer",
    parallel: int = 1,
    labels=None,
) -> MetricReport:
    """Metrics for each ``(generated, reference)`` pair plus corpus mean/median.

    ``aggregate="polymer"`` summarizes the per-polymer values;
    ``"conformation"`` pools the per-member best costs of all polymers.
    Coverage is computed only when ``coverage`` is set.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("evaluate_corpus needs at least one polymer")
    if aggregate not in ("polymer", "conformation"):
        raise ValueError(f"unknown aggregation {aggregate!r}")
    jobs = [(g, r, oracle, delta, coverage, heavy_only) for g, r in pairs]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_evaluate_one, jobs))
    else:
        results = [_evaluate_one(j) for j in jobs]
    names = list(METRICS if coverage else METRICS[:4])
    mean, median = {}, {}
    for name in names:
        if aggregate == "polymer":
            pool_values = [r.values[name] for r in results]
        else:
            pool_values = [x for r in results for x in r.per_member[name]]
        mean[name], median[name] = summarize(pool_values)
    return MetricReport(
        names=names,
        per_polymer=[r.values for r in results],
        mean=mean,
        median=median,
        delta=float(delta),
        oracle=getattr(oracle, "identifier", type(oracle).__name__),
        aggregate=aggregate,
        labels=list(labels) if labels is not None else [f"polymer-{i + 1}" for i in range(len(pairs))],
    )
