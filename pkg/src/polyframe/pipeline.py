"""End-to-end chain generation: MAR-ordered units, then rotations, then assembly."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import assemble_from
from .conformation import PolymerConformation, UnitConformation
from .diffusion import so3_reverse_sample, torsion_reverse_sample
from .schedules import DiffusionSchedule, MarSchedule, make_schedule, mar_schedule, mask_rows, mean_pool
from .templates import ideal_template
from .topology import PolymerGraph


@dataclass(frozen=True)
class GenerationConfig:
    timesteps: int = 1000
    schedule: str = "cosine"
    k_steps: int | None = None
    seed: int = 0

    def make_schedule(self) -> DiffusionSchedule:
        return make_schedule(self.schedule, self.timesteps)


@dataclass(frozen=True, eq=False)
class GenerationResult:
    conformation: PolymerConformation
    units: tuple[UnitConformation, ...]
    rotations: tuple[np.ndarray, ...]
    mar: MarSchedule
    unit_embedding: np.ndarray

    @property
    def global_embedding(self) -> np.ndarray:
        return mean_pool(self.unit_embedding)


def default_templates(graph: PolymerGraph) -> list[UnitConformation]:
    cache: dict = {}
    out = []
    for i, topo in enumerate(graph.units):
        if topo not in cache:
            cache[topo] = ideal_template(topo)
        out.append(UnitConformation(i, cache[topo].coords))
    return out


def run_generation(
    graph: PolymerGraph,
    encoder,
    torsion_denoiser,
    rotation_denoiser,
    config: GenerationConfig = GenerationConfig(),
    templates=None,
    rng: np.random.Generator | None = None,
) -> GenerationResult:
    """Generate units in MAR order, sample their rotations, assemble the chain.

    At each MAR step the units generated so far are embedded, every unit not
    yet generated is masked, and the decoded rows condition the torsion
    sampler of the units in the current subset.
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)
    sched = config.make_schedule()
    templates = default_templates(graph) if templates is None else list(templates)
    n = graph.n_units
    k = n if config.k_steps is None else config.k_steps
    mar = mar_schedule(n, k, rng)

    known: list[UnitConformation | None] = [None] * n
    for subset in mar.subsets:
        x = encoder.embed(graph, known)
        pending = [i for i in range(n) if known[i] is None]
        z = encoder.decode(encoder.encode(mask_rows(x, pending)))
        for i in subset:
            known[i] = torsion_reverse_sample(
                graph.units[i], templates[i], torsion_denoiser, z[i], sched, rng, unit_index=i
            )

    units = tuple(known)
    e = encoder.encode(encoder.embed(graph, units))
    rotations = so3_reverse_sample(rotation_denoiser, e, units, graph, sched, rng)
    conf = assemble_from(units, rotations, graph)
    return GenerationResult(conf, units, tuple(rotations), mar, e)


def generate_conformation(
    graph: PolymerGraph,
    encoder,
    torsion_denoiser,
    rotation_denoiser,
    config: GenerationConfig = GenerationConfig(),
    templates=None,
) -> PolymerConformation:
    return run_generation(graph, encoder, torsion_denoiser, rotation_denoiser, config, templates).conformation
