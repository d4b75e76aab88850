"""Command-line interface: ``polyframe <subcommand> [flags]``.

Exit status is 0 on success, 1 for invalid input and 2 for internal errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .assembly import assemble_from, roundtrip_residual
from .conformation import decompose
from .energy import energy_oracle_from_flag
from .errors import PolyframeError
from .io import (
    decomposition_from_dict,
    decomposition_to_dict,
    read_conformations,
    read_json,
    read_polymer_spec,
    report_to_dict,
    round12,
    write_conformations,
    write_json,
)
from .metrics import DEFAULT_DELTA, ConformationSet, evaluate_corpus
from .oracles import (
    ContinuityRotationDenoiser,
    StaggeredTorsionDenoiser,
    SubprocessRotationDenoiser,
    SubprocessTorsionDenoiser,
    ToyEncoder,
)
from .pipeline import GenerationConfig, run_generation
from .schedules import make_schedule, mar_schedule


class UsageError(PolyframeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _cmd_decompose(args) -> int:
    graph = read_polymer_spec(args.spec).graph()
    confs = read_conformations(args.inp, graph)
    results = [decompose(c, graph) for c in confs]
    write_json(args.out, decomposition_to_dict(results, graph))
    return 0


def _cmd_assemble(args) -> int:
    graph = read_polymer_spec(args.spec).graph()
    results = decomposition_from_dict(read_json(args.inp), graph, args.inp)
    confs = [assemble_from(r.units, [f.rotation for f in r.frames], graph) for r in results]
    write_conformations(args.out, confs, graph)
    return 0


def _cmd_roundtrip(args) -> int:
    graph = read_polymer_spec(args.spec).graph()
    worst = 0.0
    for k, conf in enumerate(read_conformations(args.inp, graph), 1):
        r = roundtrip_residual(conf, graph)
        worst = max(worst, r)
        print(f"conformation {k} residual {r:.3e}")
    print(f"max residual {worst:.3e}")
    return 0


def _denoisers(args):
    if args.torsion_oracle or args.rotation_oracle:
        if not (args.torsion_oracle and args.rotation_oracle):
            raise UsageError("--torsion-oracle and --rotation-oracle must be given together")
        return SubprocessTorsionDenoiser(args.torsion_oracle), SubprocessRotationDenoiser(args.rotation_oracle)
    return StaggeredTorsionDenoiser(), ContinuityRotationDenoiser()


def _cmd_sample(args) -> int:
    graph = read_polymer_spec(args.spec).graph()
    config = GenerationConfig(args.timesteps, args.schedule, args.k_steps, args.seed)
    tden, rden = _denoisers(args)
    encoder = ToyEncoder()
    confs = []
    try:
        # One independent stream per sample, all derived from --seed.
        for child in np.random.SeedSequence(args.seed).spawn(args.n_samples):
            res = run_generation(graph, encoder, tden, rden, config, rng=np.random.default_rng(child))
            confs.append(res.conformation)
    finally:
        for d in (tden, rden):
            if hasattr(d, "close"):
                d.close()
    write_conformations(args.out, confs, graph)
    return 0


def load_corpus(spec_paths, gen_paths, ref_paths):
    """Read ``(generated, reference)`` set pairs and labels, one per polymer."""
    if not len(spec_paths) == len(gen_paths) == len(ref_paths):
        raise UsageError("--spec, --in and --ref need the same number of paths")
    pairs, labels = [], []
    for sp, gp, rp in zip(spec_paths, gen_paths, ref_paths):
        spec = read_polymer_spec(sp)
        graph = spec.graph()
        gen = ConformationSet(read_conformations(gp, graph), graph, "generated")
        ref = ConformationSet(read_conformations(rp, graph), graph, "reference")
        pairs.append((gen, ref))
        labels.append(spec.name)
    return pairs, labels


def _cmd_evaluate(args) -> int:
    if args.ref is None:
        raise UsageError("evaluate needs --ref")
    try:
        oracle = energy_oracle_from_flag(args.energy)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    pairs, labels = load_corpus(args.spec, args.inp, args.ref)
    report = evaluate_corpus(
        pairs,
        oracle,
        delta=args.delta,
        coverage=args.coverage,
        heavy_only=args.heavy_atoms,
        aggregate=args.aggregate,
        parallel=args.parallel,
        labels=labels,
    )
    write_json(args.report, report_to_dict(report, args.seed, __version__))
    return 0


def _cmd_schedule(args) -> int:
    sched = make_schedule(args.schedule, args.timesteps)
    ts = range(sched.timesteps + 1)
    doc = {
        "kind": sched.kind,
        "timesteps": sched.timesteps,
        "alpha_bar": [round12(a) for a in sched.alpha_bar],
        "torsion_sigma": [round12(sched.torsion_sigma(t)) for t in ts],
        "sigma_rot": [round12(s) for s in sched.sigma_rot],
    }
    if args.spec:
        graph = read_polymer_spec(args.spec).graph()
        k = graph.n_units if args.k_steps is None else args.k_steps
        mar = mar_schedule(graph.n_units, k, np.random.default_rng(args.seed))
        doc["mar"] = {
            "seed": args.seed,
            "k_steps": mar.k_steps,
            "permutation": [int(i) + 1 for i in mar.permutation],
            "subsets": [[i + 1 for i in s] for s in mar.subsets],
        }
    write_json(args.out, doc)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyframe", description="Frame-based polymer conformation toolkit.")
    p.add_argument("--version", action="version", version=f"polyframe {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec=True, spec_nargs=None):
        if spec:
            sp.add_argument("--spec", required=True, nargs=spec_nargs, help="polymer spec file")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("decompose", help="conformations -> standardized units and frames (JSON)")
    common(sp)
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=_cmd_decompose)

    sp = sub.add_parser("assemble", help="units and frames (JSON) -> conformations")
    common(sp)
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_assemble)

    sp = sub.add_parser("roundtrip", help="print assemble(decompose(x)) residuals")
    common(sp)
    sp.add_argument("--in", dest="inp", required=True)
    sp.set_defaults(func=_cmd_roundtrip)

    def diffusion_flags(sp):
        sp.add_argument("--timesteps", type=_positive_int, default=1000)
        sp.add_argument("--schedule", choices=("cosine", "linear"), default="cosine")
        sp.add_argument("--k-steps", type=_positive_int, default=None, help="MAR steps (default: n_units)")

    sp = sub.add_parser("sample", help="generate conformations with oracle denoisers")
    common(sp)
    diffusion_flags(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--n-samples", type=_positive_int, default=1)
    sp.add_argument("--torsion-oracle", help="command of a line-JSON torsion denoiser")
    sp.add_argument("--rotation-oracle", help="command of a line-JSON rotation denoiser")
    sp.set_defaults(func=_cmd_sample)

    sp = sub.add_parser("evaluate", help="S-MAT / E-MAT (and optionally S-COV) report")
    common(sp, spec_nargs="+")
    sp.add_argument("--in", dest="inp", required=True, nargs="+", help="generated conformation files")
    sp.add_argument("--ref", nargs="+", help="reference conformation files")
    sp.add_argument("--delta", type=_positive_float, default=DEFAULT_DELTA)
    sp.add_argument("--energy", default="toy", help="toy | external:<cmd>")
    sp.add_argument("--report", default="-")
    sp.add_argument("--parallel", type=_positive_int, default=1)
    sp.add_argument("--coverage", action="store_true", help="include S-COV-R/P")
    sp.add_argument("--heavy-atoms", action="store_true", help="align on non-hydrogen atoms only")
    sp.add_argument("--aggregate", choices=("polymer", "conformation"), default="polymer")
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("schedule", help="print noise schedule and optional MAR partition")
    common(sp, spec=False)
    sp.add_argument("--spec", help="polymer spec; adds the MAR partition")
    diffusion_flags(sp)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=_cmd_schedule)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (PolyframeError, OSError) as exc:
        print(f"polyframe: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"polyframe: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
