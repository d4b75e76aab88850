"""Energy kernels: compiled extension if built, numpy fallback otherwise.

Set ``POLYFRAME_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("POLYFRAME_PURE_PYTHON"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

bond_energy = _active.bond_energy
angle_energy = _active.angle_energy
lj_energy = _active.lj_energy
