"""Backend selection for the numeric hot kernels.

The numba backend is used when importable. Set ``VALIDGEN_NUMBA=0`` in the
environment to force the pure-numpy fallback (useful for debugging and for
the benchmark in ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

_FALSY = {"0", "false", "no", "off"}

# skip numba's TBB probe (old TBB in some environments triggers a warning)
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")


def _pick_backend():
    if os.environ.get("VALIDGEN_NUMBA", "1").strip().lower() in _FALSY:
        from . import kernels_numpy as impl

        return impl
    try:
        from . import kernels_numba as impl
    except ImportError:
        from . import kernels_numpy as impl
    return impl


_impl = _pick_backend()

BACKEND = _impl.BACKEND_NAME
sample_from_cdf = _impl.sample_from_cdf
weighted_invalidity_estimates = _impl.weighted_invalidity_estimates
acceptance_probs = _impl.acceptance_probs
box_stats = _impl.box_stats
max_intersection = _impl.max_intersection


def load_backend(name: str):
    """Import a specific kernel module ("numpy" or "numba") regardless of the env flag."""
    if name == "numpy":
        from . import kernels_numpy as impl
    elif name == "numba":
        from . import kernels_numba as impl
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return impl
