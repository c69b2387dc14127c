"""Command-line front door: build, search, bench, serve.

Every option can also come from the environment with the SDSEARCH_
prefix (for example SDSEARCH_BUILD_THETA=6 sdsearch build ...).
"""

from __future__ import annotations

import csv
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from .core import (DatasetError, IndexFormatError, ManifestError, MetricKind,
                   SearchError)
from .index import build as build_index
from .io import (load_index, load_manifest, load_points, load_repository,
                 save_index)
from .search import (RangeQuery, exemplar_search, nn_point_search,
                     range_dataset_search, range_point_search)

_LIB_ERRORS = (DatasetError, ManifestError, IndexFormatError, SearchError,
               ValueError)


def _corner(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected x,y — got {text!r}") from None
    if len(vals) < 2:
        raise click.BadParameter(f"expected x,y — got {text!r}")
    return vals[:2]


def _query_points(points_file: str | None, coords: str | None) -> np.ndarray:
    if (points_file is None) == (coords is None):
        raise click.UsageError("provide exactly one of --points or --coords")
    if points_file is not None:
        pts, _ = load_points(points_file, 2)
        return pts
    rows = [r for r in coords.split(";") if r.strip()]
    return np.asarray([_corner(r) for r in rows], dtype=np.float64)


def _emit(payload, fmt: str, text_lines) -> None:
    if fmt == "json":
        click.echo(json.dumps(payload))
    else:
        for line in text_lines():
            click.echo(line)


@click.group(context_settings={"auto_envvar_prefix": "SDSEARCH"})
def cli() -> None:
    """Spatial dataset search over repositories of point sets."""


@cli.command("build")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Repository manifest (JSON).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write the index snapshot.")
@click.option("--theta", default=None, type=click.IntRange(1, 16),
              help="Grid resolution exponent; overrides the manifest value.")
@click.option("--leaf-capacity", "-f", "leaf_capacity", default=None,
              type=click.IntRange(min=1),
              help="Max points per tree leaf; overrides the manifest value.")
@click.option("--outlier-removal/--no-outlier-removal", default=True,
              show_default=True, help="Prune far-out points while building.")
def build_cmd(manifest_path, out_path, theta, leaf_capacity, outlier_removal):
    """Build an index from a manifest and persist it."""
    try:
        manifest = load_manifest(manifest_path)
        repo = load_repository(manifest)
        t0 = time.perf_counter()
        idx = build_index(
            repo,
            f=leaf_capacity if leaf_capacity is not None else manifest.leaf_capacity,
            theta=theta if theta is not None else manifest.theta,
            outlier_removal=outlier_removal)
        elapsed = time.perf_counter() - t0
        save_index(idx, out_path)
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    removed = sum(int(t.removed_ids.size) for t in idx.datasets)
    rp = "inf" if idx.r_prime == float("inf") else f"{idx.r_prime:.6g}"
    click.echo(f"built {len(idx.datasets)} datasets in {elapsed:.2f}s; "
               f"r'={rp}; removed {removed} points; wrote {out_path}")


@cli.group("search")
def search_group() -> None:
    """Run one search against a persisted index."""


_INDEX_OPT = click.option("--index", "index_path", required=True,
                          type=click.Path(exists=True, dir_okay=False),
                          help="Index snapshot from `sdsearch build`.")
_FORMAT_OPT = click.option("--format", "fmt", default="json", show_default=True,
                           type=click.Choice(["json", "text"]))


@search_group.command("range")
@_INDEX_OPT
@click.option("--lo", required=True, help="Lower corner, x,y.")
@click.option("--hi", required=True, help="Upper corner, x,y.")
@_FORMAT_OPT
def search_range_cmd(index_path, lo, hi, fmt):
    """Dataset ids whose extent intersects the rectangle."""
    try:
        idx = load_index(index_path)
        ids = range_dataset_search(idx, RangeQuery(_corner(lo), _corner(hi)))
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    _emit({"ids": list(map(int, ids))}, fmt, lambda: (str(i) for i in ids))


@search_group.command("exemplar")
@_INDEX_OPT
@click.option("--points", "points_file", type=click.Path(exists=True, dir_okay=False),
              help="Query exemplar as a point file.")
@click.option("--coords", help="Inline query points, e.g. '0,0;1,2'.")
@click.option("--metric", required=True,
              type=click.Choice([m.value for m in MetricKind]))
@click.option("-k", "k", default=10, show_default=True,
              type=click.IntRange(min=1), help="Result count.")
@click.option("--epsilon", type=float, default=None,
              help="Approximation slack (haus_approx only; defaults to one grid cell).")
@_FORMAT_OPT
def search_exemplar_cmd(index_path, points_file, coords, metric, k, epsilon, fmt):
    """Datasets most similar to the query exemplar."""
    q = _query_points(points_file, coords)
    try:
        idx = load_index(index_path)
        hits = exemplar_search(idx, q, MetricKind(metric), k, epsilon=epsilon)
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    payload = {"hits": [{"id": h.dataset_id, "score": float(f"{h.score:.12g}"),
                         "rank": h.rank} for h in hits]}
    _emit(payload, fmt,
          lambda: (f"{h.rank:>4}  {h.dataset_id:>6}  {h.score:.6g}" for h in hits))


@search_group.command("points-range")
@_INDEX_OPT
@click.option("--dataset", "dataset_id", required=True, type=int)
@click.option("--lo", required=True, help="Lower corner, x,y.")
@click.option("--hi", required=True, help="Upper corner, x,y.")
@_FORMAT_OPT
def search_points_range_cmd(index_path, dataset_id, lo, hi, fmt):
    """Points of one dataset inside the rectangle."""
    try:
        idx = load_index(index_path)
        pts = range_point_search(idx, dataset_id,
                                 RangeQuery(_corner(lo), _corner(hi)))
    except KeyError as exc:
        raise click.ClickException(str(exc.args[0])) from exc
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    _emit({"points": [[float(v) for v in row] for row in pts]}, fmt,
          lambda: (" ".join(f"{v:.6g}" for v in row) for row in pts))


@search_group.command("points-nn")
@_INDEX_OPT
@click.option("--dataset", "dataset_id", required=True, type=int)
@click.option("--points", "points_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--coords", help="Inline query points, e.g. '0,0;1,2'.")
@_FORMAT_OPT
def search_points_nn_cmd(index_path, dataset_id, points_file, coords, fmt):
    """Nearest dataset point for every query point."""
    q = _query_points(points_file, coords)
    try:
        idx = load_index(index_path)
        res = nn_point_search(idx, q, dataset_id)
    except KeyError as exc:
        raise click.ClickException(str(exc.args[0])) from exc
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    pairs = [{"query": [float(v) for v in qp], "nn": [float(v) for v in pp],
              "dist": float(f"{d:.12g}")} for qp, pp, d in res]
    _emit({"pairs": pairs}, fmt, lambda: (
        " ".join(f"{v:.6g}" for v in p["query"]) + "  ->  "
        + " ".join(f"{v:.6g}" for v in p["nn"]) + f"  {p['dist']:.6g}"
        for p in pairs))


@cli.command("bench")
@click.option("--suite", required=True,
              type=click.Choice(["topk-haus", "topk-overlap", "nnp",
                                 "build-scaling", "kernels"]))
@click.option("--repeat", default=3, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("-m", "m", default=20, show_default=True, type=click.IntRange(min=1),
              help="Datasets per synthetic repository.")
@click.option("-n", "n", default=2000, show_default=True, type=click.IntRange(min=1),
              help="Points per synthetic dataset.")
@click.option("--theta", default=5, show_default=True, type=click.IntRange(1, 16))
@click.option("--leaf-capacity", "-f", "leaf_capacity", default=10,
              show_default=True, type=click.IntRange(min=1))
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write CSV here instead of standard output.")
def bench_cmd(suite, repeat, seed, m, n, theta, leaf_capacity, out_path):
    """Time one suite over synthetic repositories; emits CSV."""
    from .bench import COLUMNS, run_suite
    try:
        rows = run_suite(suite, repeat=repeat, seed=seed, m=m, n=n,
                         theta=theta, f=leaf_capacity)
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    sink = open(out_path, "w", newline="") if out_path else sys.stdout
    try:
        w = csv.writer(sink)
        w.writerow(COLUMNS)
        w.writerows(rows)
    finally:
        if out_path:
            sink.close()


@cli.command("serve")
@click.option("--index", "index_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--addr", default="127.0.0.1:8080", show_default=True,
              help="Listen address, host:port.")
@click.option("--static", "static_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Also serve a built web UI from this directory.")
@click.option("--max-body", default=8_000_000, show_default=True,
              type=click.IntRange(min=1024), help="Request payload cap in bytes.")
def serve_cmd(index_path, addr, static_dir, max_body):
    """Serve the HTTP API (and optionally the web UI)."""
    import uvicorn

    from .service import create_app
    host, _, port_s = addr.rpartition(":")
    if not host or not port_s.isdigit():
        raise click.BadParameter(f"--addr must be host:port, got {addr!r}")
    try:
        idx = load_index(index_path)
    except _LIB_ERRORS as exc:
        raise click.ClickException(str(exc)) from exc
    app = create_app(idx, max_body=max_body,
                     static_dir=Path(static_dir) if static_dir else None)
    uvicorn.run(app, host=host, port=int(port_s), log_level="info")


def main() -> None:
    cli(auto_envvar_prefix="SDSEARCH")


if __name__ == "__main__":
    main()
