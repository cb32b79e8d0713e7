"""Engine backend selection.

The hot kernels (the simulation event loop and the forced-order evaluator of
the exhaustive solver) exist twice: as a compiled extension and as pure Python
reference implementations.  The compiled lane is picked automatically when the
extension was built; both lanes produce bit-identical results.  Set the
``DAGSCHED_BACKEND`` environment variable to ``pure`` or ``compiled`` to force
a lane, or pass ``backend=`` to the entry points.
"""

from __future__ import annotations

import os

try:
    from . import _speedups
    HAVE_COMPILED = True
except ImportError:  # extension not built; fall back to pure Python
    _speedups = None
    HAVE_COMPILED = False


def resolve_backend(name=None) -> str:
    """Map an explicit or environment-provided choice to a usable backend."""
    if name is None:
        name = os.environ.get("DAGSCHED_BACKEND")
    if name is None:
        return "compiled" if HAVE_COMPILED else "pure"
    if name not in ("pure", "compiled"):
        raise ValueError(f"unknown engine backend '{name}'")
    if name == "compiled" and not HAVE_COMPILED:
        raise RuntimeError(
            "compiled engine requested but the extension is not built")
    return name


def backend_name() -> str:
    """The backend the package would currently use."""
    return resolve_backend(None)


def forced_order_factory(backend=None):
    """Evaluator factory for fixed per-device execution orders.

    Returns ``factory(exec_t, in_ptr, in_src, in_tt, n, k)`` producing an
    ``evaluate(sequences) -> makespan`` callable; the per-assignment arrays
    are converted once so that evaluating many orders stays cheap.
    """
    chosen = resolve_backend(backend)
    if chosen == "compiled":
        import numpy as np

        def factory(exec_t, in_ptr, in_src, in_tt, n, k):
            exec_arr = np.asarray(exec_t, dtype=np.float64)
            in_ptr_arr = np.asarray(in_ptr, dtype=np.int64)
            in_src_arr = np.asarray(in_src, dtype=np.int64)
            in_tt_arr = np.asarray(in_tt, dtype=np.float64)
            seq = np.empty(n, dtype=np.int64)
            seq_ptr = np.empty(k + 1, dtype=np.int64)

            def evaluate(sequences):
                pos = 0
                seq_ptr[0] = 0
                for d, rendition in enumerate(sequences):
                    for v in rendition:
                        seq[pos] = v
                        pos += 1
                    seq_ptr[d + 1] = pos
                return _speedups.forced_order_kernel(
                    seq, seq_ptr, exec_arr, in_ptr_arr, in_src_arr,
                    in_tt_arr, n, k)

            return evaluate

        return factory

    def factory(exec_t, in_ptr, in_src, in_tt, n, k):
        from ..oracle import forced_order_makespan_py

        def evaluate(sequences):
            return forced_order_makespan_py(sequences, exec_t, in_ptr,
                                            in_src, in_tt, n, k)

        return evaluate

    return factory
