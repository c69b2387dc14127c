"""Kernel backend selection and tree-level wrappers.

The compiled extension is preferred when it imported cleanly; setting
SDSEARCH_PURE_PYTHON=1 forces the pure mirror. Both backends implement
the same three entry points with bit-identical results, so everything
above this module is backend-agnostic.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykern
from ._pykern import MODE_HAUS, MODE_HAUS_APPROX, MODE_HAUS_NN, MODE_NN
from .index import DatasetTree

__all__ = [
    "BACKEND",
    "MODE_HAUS",
    "MODE_HAUS_APPROX",
    "MODE_NN",
    "MODE_HAUS_NN",
    "backend_name",
    "available_backends",
    "get_kernels",
    "build_tree_arrays",
    "brute_hausdorff",
    "brute_nn",
    "tree_traverse",
]

if os.environ.get("SDSEARCH_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    _impl = _pykern
    BACKEND = "pure"
else:
    try:
        from . import _ckern as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykern
        BACKEND = "pure"


def backend_name() -> str:
    return BACKEND


def available_backends() -> tuple[str, ...]:
    try:
        from . import _ckern  # noqa: F401
    except ImportError:
        return ("pure",)
    return ("compiled", "pure")


def get_kernels(name: str):
    """Fetch a specific backend by name ("compiled" or "pure"); used by the
    parity tests and the kernel benchmark."""
    if name == "pure":
        return _pykern
    if name == "compiled":
        from . import _ckern
        return _ckern
    raise ValueError(f"unknown kernel backend {name!r}")


def build_tree_arrays(pts: np.ndarray, ids: np.ndarray, f: int, md: int,
                      impl=None):
    """Build flat preorder ball-tree arrays for one point set.

    Returns (o, r, lo, hi, left, right, span_lo, span_hi, min_id,
    points, ids) with the points reordered into preorder-leaf order.
    ``impl`` overrides the backend (used by parity tests).
    """
    eng = impl if impl is not None else _impl
    return eng.build_tree_arrays(pts, ids, int(f), int(md))


def brute_hausdorff(q: np.ndarray, d: np.ndarray) -> float:
    return float(_impl.brute_hausdorff(q, d))


def brute_nn(q: np.ndarray, d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _impl.brute_nn(q, d)


def tree_traverse(qt: DatasetTree, dt: DatasetTree, mode: int,
                  eps: float = 0.0, impl=None):
    """Run the traversal between two flat trees.

    Returns (hausdorff, nn_ids, nn_dists, pops). ``nn_ids``/``nn_dists``
    are aligned with the query dataset's original row order and are None
    for pure-Hausdorff modes. ``impl`` overrides the backend (used by
    parity tests).
    """
    if qt.metric_dims != dt.metric_dims:
        raise ValueError("trees disagree on metric dimensionality")
    eng = impl if impl is not None else _impl
    want_nn = mode >= MODE_NN
    n_out = qt.points.shape[0] if want_nn else 0
    nn_id = np.full(n_out, -1, dtype=np.int64)
    nn_dist = np.full(n_out, np.nan, dtype=np.float64)
    haus, pops = eng.traverse(
        qt.mo, qt.r, qt.left, qt.right, qt.span_lo, qt.span_hi, qt.mpts, qt.ids,
        dt.mo, dt.r, dt.left, dt.right, dt.span_lo, dt.span_hi, dt.mpts, dt.ids,
        dt.min_id, mode, eps, nn_id, nn_dist,
    )
    if want_nn:
        return float(haus), nn_id, nn_dist, int(pops)
    return float(haus), None, None, int(pops)
