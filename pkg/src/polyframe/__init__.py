"""Frame-based polymer conformation toolkit.

Decomposes chains into standardized repeating-unit conformations plus rigid
frames, reassembles them, samples new chains with pluggable denoisers and
scores conformation sets.
"""

__version__ = "0.1.0"

from .assembly import AssemblyInput, assemble, assemble_from, roundtrip_residual
from .conformation import PolymerConformation, UnitConformation, decompose, extract_frame, rotate_torsion
from .errors import PolyframeError
from .geometry import RigidTransform, gram_schmidt_rotation, kabsch_align
from .kernels import BACKEND
from .metrics import ConformationSet, e_mat, evaluate_corpus, s_cov, s_mat
from .pipeline import GenerationConfig, generate_conformation
from .topology import PolymerGraph, UnitTopology, build_polymer_graph

__all__ = [
    "AssemblyInput", "BACKEND", "ConformationSet", "GenerationConfig", "PolymerConformation",
    "PolymerGraph", "PolyframeError", "RigidTransform", "UnitConformation", "UnitTopology",
    "assemble", "assemble_from", "build_polymer_graph", "decompose", "e_mat", "evaluate_corpus",
    "extract_frame", "generate_conformation", "gram_schmidt_rotation", "kabsch_align",
    "rotate_torsion", "roundtrip_residual", "s_cov", "s_mat",
]
