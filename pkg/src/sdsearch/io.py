"""Ingestion, manifests, synthetic repositories, and index persistence.

Point files are delimiter-separated numeric text (comma or tab detected
automatically, anything else by explicit flag) with an optional single
header line. Malformed lines are rejected loudly, with line numbers.

The index snapshot is a single binary blob: magic, version, a JSON
directory of parameters and array descriptors, the raw little-endian
array payload, and a trailing SHA-256 of everything before it.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (Dataset, DatasetError, IndexFormatError, ManifestError,
                   Repository)
from .grid import Grid
from .index import DatasetTree, RepoTree, UnifiedIndex

__all__ = [
    "Manifest",
    "ManifestEntry",
    "load_points",
    "load_dataset",
    "load_manifest",
    "load_repository",
    "generate_synthetic",
    "save_index",
    "load_index",
]

log = logging.getLogger(__name__)

_MAGIC = b"SDSIDX\x00\x01"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    dataset_id: int
    name: str
    path: Path
    dim: int


@dataclass(frozen=True)
class Manifest:
    name: str
    theta: int
    metric_dims: int
    leaf_capacity: int
    entries: tuple[ManifestEntry, ...]


def _detect_delimiter(line: str) -> str:
    if "," in line:
        return ","
    if "\t" in line:
        return "\t"
    raise DatasetError(
        "cannot auto-detect delimiter (expected comma or tab); pass one explicitly"
    )


def load_points(path, d: int, *, delimiter: str | None = None
                ) -> tuple[np.ndarray, list[int]]:
    """Parse a point file into an (n, d) array.

    Returns the points plus the 1-based numbers of rejected lines. A
    single leading header line is skipped when its fields fail to parse
    as numbers. Raises on unreadable files, zero valid rows, or fewer
    than ``d`` columns throughout.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    rows: list[list[float]] = []
    rejected: list[int] = []
    delim = delimiter
    header_allowed = True
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if delim is None:
            delim = _detect_delimiter(line)
        fields = [f for f in line.split(delim)]
        ok = len(fields) >= d
        vals: list[float] = []
        if ok:
            for f in fields[:d]:
                try:
                    v = float(f)
                except ValueError:
                    ok = False
                    break
                if not math.isfinite(v):
                    ok = False
                    break
                vals.append(v)
        if ok:
            rows.append(vals)
            header_allowed = False
        elif header_allowed:
            header_allowed = False  # a single leading header is tolerated
        else:
            rejected.append(lineno)
    if rejected:
        log.warning("%s: rejected %d malformed line(s): %s", path, len(rejected),
                    ", ".join(map(str, rejected[:20])) + ("…" if len(rejected) > 20 else ""))
    if not rows:
        raise DatasetError(f"{path}: no valid points")
    return np.asarray(rows, dtype=np.float64), rejected


def load_dataset(path, d: int, *, dataset_id: int = 0, name: str | None = None,
                 delimiter: str | None = None) -> Dataset:
    pts, _ = load_points(path, d, delimiter=delimiter)
    return Dataset(dataset_id, name if name is not None else Path(path).stem, pts)


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
    try:
        raw_entries = doc["datasets"]
    except KeyError:
        raise ManifestError("manifest lacks a 'datasets' list") from None
    if not isinstance(raw_entries, list) or not raw_entries:
        raise ManifestError("manifest 'datasets' must be a non-empty list")
    entries = []
    seen = set()
    for e in raw_entries:
        try:
            did = int(e["id"])
            ename = str(e.get("name", f"d{did}"))
            epath = Path(e["path"])
            dim = int(e.get("dim", 2))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"bad dataset entry {e!r}: {exc}") from exc
        if did in seen:
            raise ManifestError(f"duplicate dataset id {did}")
        seen.add(did)
        if not epath.is_absolute():
            epath = path.parent / epath
        if not epath.exists():
            raise ManifestError(f"dataset file not found: {epath}")
        entries.append(ManifestEntry(did, ename, epath, dim))
    return Manifest(
        name=str(doc.get("name", path.stem)),
        theta=int(doc.get("theta", 5)),
        metric_dims=int(doc.get("metric_dims", 2)),
        leaf_capacity=int(doc.get("f", 10)),
        entries=tuple(entries),
    )


def load_repository(manifest: Manifest) -> Repository:
    datasets = []
    for e in manifest.entries:
        pts, _ = load_points(e.path, e.dim)
        datasets.append(Dataset(e.dataset_id, e.name, pts))
    return Repository(tuple(datasets), metric_dims=manifest.metric_dims)


def generate_synthetic(m: int, n: int, distribution: str = "uniform",
                       outlier_rate: float = 0.0, seed: int = 0,
                       *, dims: int = 2, metric_dims: int = 2
                       ) -> tuple[Repository, dict[int, np.ndarray]]:
    """Reproducible synthetic repository with labeled planted outliers.

    ``n`` counts all points per dataset, outliers included (their count
    is round(outlier_rate * n)). Clustered datasets are unions of uniform
    discs; uniform datasets fill one rectangle. Outliers arrive in small
    bursts: ring-shaped patches centered 10 to 14 cluster radii away from
    a cluster's centroid, so every outlier individually sits at least 10
    cluster radii out. Burst points are mutually spread (ring geometry),
    the shape such junk takes when a sensor glitches repeatedly.

    Returns the repository plus, per dataset id, a boolean mask over rows
    marking the planted outliers.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    if not (0.0 <= outlier_rate < 1.0):
        raise ValueError("outlier_rate must lie in [0, 1)")
    if distribution not in ("uniform", "clustered"):
        raise ValueError(f"unknown distribution {distribution!r}")
    if dims < metric_dims or metric_dims < 2:
        raise ValueError("need dims >= metric_dims >= 2")
    n_out = int(round(outlier_rate * n))
    n_in = n - n_out
    if n_in < 1:
        raise ValueError("outlier_rate leaves no inliers")

    rng = np.random.default_rng(seed)
    datasets = []
    labels: dict[int, np.ndarray] = {}
    for did in range(m):
        center = rng.uniform(150.0, 850.0, size=2)
        if distribution == "uniform":
            extent = rng.uniform(150.0, 400.0)
            inliers = rng.uniform(center - extent / 2.0, center + extent / 2.0,
                                  size=(n_in, 2))
            anchors = np.repeat(center[None, :], 1, axis=0)
            cluster_r = np.array([extent / 2.0 * math.sqrt(2.0)])
        else:
            k = int(rng.integers(2, 6))
            spread = rng.uniform(120.0, 300.0)
            anchors = center + rng.uniform(-spread / 2.0, spread / 2.0, size=(k, 2))
            cluster_r = rng.uniform(8.0, 15.0, size=k)
            weights = rng.dirichlet(np.full(k, 3.0))
            counts = rng.multinomial(n_in, weights)
            parts = []
            for j in range(k):
                # uniform disc: sqrt-radius keeps density flat
                ang = rng.uniform(0.0, 2.0 * math.pi, counts[j])
                rad = cluster_r[j] * np.sqrt(rng.uniform(0.0, 1.0, counts[j]))
                parts.append(anchors[j] + np.stack(
                    [rad * np.cos(ang), rad * np.sin(ang)], axis=1))
            inliers = np.concatenate(parts) if parts else np.empty((0, 2))

        out_pts = np.empty((0, 2))
        if n_out:
            bursts: list[np.ndarray] = []
            left = n_out
            while left > 0:
                size = int(min(left, rng.integers(6, 11)))
                if left - size in (1, 2, 3, 4, 5):
                    size = left  # avoid leaving a burst too small to spread
                j = int(rng.integers(anchors.shape[0]))
                direction = rng.uniform(0.0, 2.0 * math.pi)
                dist = rng.uniform(10.5, 14.0) * cluster_r[j]
                patch_c = anchors[j] + dist * np.array(
                    [math.cos(direction), math.sin(direction)])
                patch_r = rng.uniform(1.4, 1.8) * cluster_r[j]
                # evenly spread ring angles keep the burst centroid pinned to
                # the patch center, so no member hides near the leaf mean
                ang = (direction + 2.0 * math.pi
                       * (np.arange(size) + rng.uniform(-0.2, 0.2, size)) / size)
                rad = patch_r * rng.uniform(0.92, 1.0, size)
                bursts.append(patch_c + np.stack(
                    [rad * np.cos(ang), rad * np.sin(ang)], axis=1))
                left -= size
            out_pts = np.concatenate(bursts)

        pts = np.concatenate([inliers, out_pts])
        mask = np.zeros(n, dtype=bool)
        mask[n_in:] = True
        perm = rng.permutation(n)
        pts = pts[perm]
        mask = mask[perm]
        if dims > 2:
            aux = rng.uniform(0.0, 1.0, size=(n, dims - 2))
            pts = np.concatenate([pts, aux], axis=1)
        datasets.append(Dataset(did, f"synth-{did:03d}", pts))
        labels[did] = mask
    return Repository(tuple(datasets), metric_dims=metric_dims), labels


# ---------------------------------------------------------------- persistence

_DATASET_ARRAYS = ("o", "r", "lo", "hi", "left", "right", "span_lo", "span_hi",
                   "min_id", "points", "ids", "z", "removed_ids")
_REPO_ARRAYS = ("o", "r", "lo", "hi", "left", "right", "span_lo", "span_hi",
                "z_cat", "z_lo", "z_hi", "root_ids")


def _pad8(n: int) -> int:
    return (8 - n % 8) % 8


def save_index(idx: UnifiedIndex, path) -> None:
    """Write the index snapshot; see the module docstring for the layout."""
    arrays: list[tuple[str, np.ndarray]] = []
    for pos, t in enumerate(idx.datasets):
        for name in _DATASET_ARRAYS:
            arrays.append((f"d{pos}.{name}", getattr(t, name)))
    for name in _REPO_ARRAYS:
        arrays.append((f"repo.{name}", getattr(idx.repo_tree, name)))

    directory = []
    offset = 0
    blobs: list[bytes] = []
    for key, arr in arrays:
        arr = np.ascontiguousarray(arr)
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        blob = arr.tobytes()
        directory.append({
            "key": key,
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(blob),
        })
        pad = _pad8(len(blob))
        blobs.append(blob + b"\x00" * pad)
        offset += len(blob) + pad
    payload_nbytes = offset

    header = {
        "payload_nbytes": payload_nbytes,
        "format_version": _FORMAT_VERSION,
        "leaf_capacity": idx.leaf_capacity,
        "theta": idx.theta,
        "metric_dims": idx.metric_dims,
        "r_prime": repr(idx.r_prime),
        "grid": {
            "origin": [repr(float(v)) for v in idx.grid.origin],
            "extent": [repr(float(v)) for v in idx.grid.extent],
            "resolution": idx.grid.resolution,
        },
        "datasets": [
            {"id": t.dataset_id, "name": t.name, "n_original": t.n_original}
            for t in idx.datasets
        ],
        "arrays": directory,
    }
    head = json.dumps(header, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    out = bytearray()
    out += _MAGIC
    out += struct.pack("<I", _FORMAT_VERSION)
    out += struct.pack("<Q", len(head))
    out += head
    out += b"\x00" * _pad8(len(out))
    payload_start = len(out)
    for b in blobs:
        out += b
    out += hashlib.sha256(bytes(out)).digest()
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(bytes(out))
    tmp.replace(path)


def load_index(path) -> UnifiedIndex:
    """Read a snapshot back; queries against it are byte-identical to the
    in-memory original."""
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise IndexFormatError(f"cannot read {path}: {exc}") from exc
    if len(buf) < len(_MAGIC) + 12 + 32 or not buf.startswith(_MAGIC):
        raise IndexFormatError("not an index snapshot (bad magic)")
    digest = hashlib.sha256(buf[:-32]).digest()
    if digest != buf[-32:]:
        raise IndexFormatError("snapshot corrupt: checksum mismatch")
    pos = len(_MAGIC)
    (version,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if version != _FORMAT_VERSION:
        raise IndexFormatError(
            f"snapshot format version {version} is not supported (expected {_FORMAT_VERSION})")
    (head_len,) = struct.unpack_from("<Q", buf, pos)
    pos += 8
    try:
        header = json.loads(buf[pos:pos + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IndexFormatError(f"snapshot header unreadable: {exc}") from exc
    pos += head_len
    pos += _pad8(len(_MAGIC) + 12 + head_len)
    payload = buf[pos:-32]
    if "payload_nbytes" in header and len(payload) != int(header["payload_nbytes"]):
        raise IndexFormatError("snapshot truncated: payload size mismatch")

    store: dict[str, np.ndarray] = {}
    for spec in header["arrays"]:
        dt = np.dtype(spec["dtype"])
        start = spec["offset"]
        end = start + spec["nbytes"]
        if end > len(payload):
            raise IndexFormatError("snapshot truncated: array extends past payload")
        arr = np.frombuffer(payload, dtype=dt, count=int(np.prod(spec["shape"], dtype=np.int64)) if spec["shape"] else 1, offset=start)
        store[spec["key"]] = arr.reshape(spec["shape"])

    md = int(header["metric_dims"])
    trees = []
    for i, meta in enumerate(header["datasets"]):
        kw = {name: store[f"d{i}.{name}"] for name in _DATASET_ARRAYS}
        trees.append(DatasetTree(
            dataset_id=int(meta["id"]), name=str(meta["name"]),
            metric_dims=md, n_original=int(meta["n_original"]), **kw))
    repo_kw = {name: store[f"repo.{name}"] for name in _REPO_ARRAYS}
    g = header["grid"]
    return UnifiedIndex(
        repo_tree=RepoTree(**repo_kw),
        datasets=tuple(trees),
        grid=Grid(
            origin=np.array([float(v) for v in g["origin"]]),
            extent=np.array([float(v) for v in g["extent"]]),
            resolution=int(g["resolution"]),
        ),
        leaf_capacity=int(header["leaf_capacity"]),
        theta=int(header["theta"]),
        metric_dims=md,
        r_prime=float(header["r_prime"]),
    )
