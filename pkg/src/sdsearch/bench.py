"""Benchmark suites emitting plot-ready CSV rows.

Each suite sweeps one parameter grid over a fixed set of methods and
emits exactly |grid| x |methods| rows. One warmup call per cell is
discarded before timing. All randomness flows from the seed argument.
"""

from __future__ import annotations

import time
from collections.abc import Callable

import numpy as np

from . import baselines
from .core import MetricKind
from .index import UnifiedIndex, build
from .io import generate_synthetic
from .kernels import available_backends, get_kernels
from .search import exemplar_search, nn_point_search

__all__ = ["COLUMNS", "SUITES", "run_suite"]

COLUMNS = ["suite", "param", "value", "method", "mean_s", "repeat"]


def _time(fn: Callable[[], object], repeat: int) -> float:
    fn()  # warmup, discarded
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def _mkrepo(m: int, n: int, seed: int, *, theta: int, f: int,
            outlier_removal: bool = False) -> tuple:
    repo, _ = generate_synthetic(m, n, "clustered", 0.0, seed)
    idx = build(repo, f=f, theta=theta, outlier_removal=outlier_removal)
    return repo, idx


def _rows_topk_haus(repeat: int, seed: int, m: int, n: int, theta: int, f: int):
    repo, idx = _mkrepo(m, n, seed, theta=theta, f=f)
    rng = np.random.default_rng(seed + 1)
    q = repo.datasets[int(rng.integers(len(repo.datasets)))].points
    rows = []
    for k in (1, 5, 10, 20, 50):
        timings = {
            "exact_haus": _time(
                lambda: exemplar_search(idx, q, MetricKind.HAUS_EXACT, k), repeat),
            "scan_haus": _time(
                lambda: baselines.scan_haus_topk(idx, q, k), repeat),
        }
        for method, mean_s in timings.items():
            rows.append(["topk-haus", "k", k, method, f"{mean_s:.6f}", repeat])
    return rows


def _rows_topk_overlap(repeat: int, seed: int, m: int, n: int, theta: int, f: int):
    repo, idx = _mkrepo(m, n, seed, theta=theta, f=f)
    rng = np.random.default_rng(seed + 1)
    q = repo.datasets[int(rng.integers(len(repo.datasets)))].points
    rows = []
    for k in (1, 5, 10, 20, 50):
        timings = {
            "ia": _time(lambda: exemplar_search(idx, q, MetricKind.IA, k), repeat),
            "scan_ia": _time(lambda: baselines.scan_ia_topk(idx, q, k), repeat),
            "gbo": _time(
                lambda: exemplar_search(idx, q, MetricKind.GBO, k), repeat),
            "scan_gbo": _time(
                lambda: baselines.scan_gbo_topk(idx, q, k), repeat),
        }
        for method, mean_s in timings.items():
            rows.append(["topk-overlap", "k", k, method, f"{mean_s:.6f}", repeat])
    return rows


def _rows_nnp(repeat: int, seed: int, m: int, n: int, theta: int, f: int):
    _, idx = _mkrepo(max(m, 1), n, seed, theta=theta, f=f)
    target = idx.datasets[0]
    dpts = target.points
    rng = np.random.default_rng(seed + 2)
    rows = []
    for s in (10, 100, 1000, 10000):
        q = rng.uniform(dpts.min(axis=0), dpts.max(axis=0), size=(s, dpts.shape[1]))
        timings = {
            "nnp": _time(
                lambda: nn_point_search(idx, q, target.dataset_id), repeat),
            "brute_nn": _time(
                lambda: baselines.brute_nn(q, dpts, metric_dims=idx.metric_dims),
                repeat),
        }
        for method, mean_s in timings.items():
            rows.append(["nnp", "s", s, method, f"{mean_s:.6f}", repeat])
    return rows


def _rows_build_scaling(repeat: int, seed: int, m: int, n: int, theta: int, f: int):
    rows = []
    for size in (1000, 2000, 4000, 8000):
        repo, _ = generate_synthetic(m, size, "clustered", 0.0, seed)
        mean_s = _time(lambda: build(repo, f=f, theta=theta,
                                     outlier_removal=False), repeat)
        rows.append(["build-scaling", "n", size, "build", f"{mean_s:.6f}", repeat])
    return rows


def _rows_kernels(repeat: int, seed: int, m: int, n: int, theta: int, f: int):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 100.0, size=(n, 2))
    b = rng.uniform(0.0, 100.0, size=(n, 2))
    rows = []
    backends = available_backends()
    for size in (200, 1000, n):
        qa, qb = a[:size], b[:size]
        for name in backends:
            kern = get_kernels(name)
            mean_s = _time(lambda: kern.brute_hausdorff(qa, qb), repeat)
            rows.append(["kernels", "n", size, name, f"{mean_s:.6f}", repeat])
    return rows


SUITES = {
    "topk-haus": _rows_topk_haus,
    "topk-overlap": _rows_topk_overlap,
    "nnp": _rows_nnp,
    "build-scaling": _rows_build_scaling,
    "kernels": _rows_kernels,
}


def run_suite(name: str, *, repeat: int = 3, seed: int = 0, m: int = 20,
              n: int = 2000, theta: int = 5, f: int = 10) -> list[list]:
    """Run one suite; returns CSV rows matching COLUMNS."""
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(
            f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}"
        ) from None
    if repeat < 1:
        raise ValueError("repeat must be at least 1")
    return fn(repeat, seed, m, n, theta, f)
