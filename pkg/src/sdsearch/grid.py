"""Uniform 2-d grid over a repository's footprint, with Z-order cell ids.

Each dataset gets a signature: the sorted set of Z-order (Morton) ids of
the grid cells its points occupy. Signature overlap is a cheap proxy for
spatial overlap between datasets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Mbr

__all__ = [
    "MAX_RESOLUTION",
    "Grid",
    "morton_encode",
    "morton_decode",
    "signature_intersection_size",
]

# cell coordinates are interleaved into an int64, 2 bits per level
MAX_RESOLUTION = 16


def _part1by1(v: np.ndarray) -> np.ndarray:
    """Spread the low 16 bits of each value so they occupy even positions."""
    v = v.astype(np.int64) & 0xFFFF
    v = (v | (v << 8)) & 0x00FF00FF
    v = (v | (v << 4)) & 0x0F0F0F0F
    v = (v | (v << 2)) & 0x33333333
    v = (v | (v << 1)) & 0x55555555
    return v


def _unpart1by1(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.int64) & 0x55555555
    v = (v | (v >> 1)) & 0x33333333
    v = (v | (v >> 2)) & 0x0F0F0F0F
    v = (v | (v >> 4)) & 0x00FF00FF
    v = (v | (v >> 8)) & 0x0000FFFF
    return v


def morton_encode(cx, cy, resolution: int) -> np.ndarray | int:
    """Interleave cell coordinates into Z-order ids; x fills the even bits.

    Accepts scalars or arrays; both coordinates must lie in
    ``[0, 2**resolution)``.
    """
    _check_resolution(resolution)
    x = np.asarray(cx, dtype=np.int64)
    y = np.asarray(cy, dtype=np.int64)
    side = 1 << resolution
    if (x < 0).any() or (y < 0).any() or (x >= side).any() or (y >= side).any():
        raise ValueError(f"cell coordinates out of [0, {side}) range")
    z = _part1by1(x) | (_part1by1(y) << 1)
    if np.isscalar(cx) and np.isscalar(cy):
        return int(z)
    return z


def morton_decode(z, resolution: int):
    """Inverse of :func:`morton_encode`."""
    _check_resolution(resolution)
    zz = np.asarray(z, dtype=np.int64)
    if (zz < 0).any() or (zz >= (1 << (2 * resolution))).any():
        raise ValueError("z id out of range for this resolution")
    x = _unpart1by1(zz)
    y = _unpart1by1(zz >> 1)
    if np.isscalar(z):
        return int(x), int(y)
    return x, y


def _check_resolution(resolution: int) -> None:
    if not (1 <= int(resolution) <= MAX_RESOLUTION):
        raise ValueError(f"resolution must lie in [1, {MAX_RESOLUTION}]")


@dataclass(frozen=True)
class Grid:
    """A ``2**resolution`` by ``2**resolution`` partition of a rectangle.

    The rectangle is the first-two-axes footprint of a repository. Points
    sitting exactly on the max boundary fall into the last cell; points
    outside the rectangle have no cell.
    """

    origin: np.ndarray
    extent: np.ndarray
    resolution: int

    def __post_init__(self):
        _check_resolution(self.resolution)
        origin = np.asarray(self.origin, dtype=np.float64).ravel()[:2].copy()
        extent = np.asarray(self.extent, dtype=np.float64).ravel()[:2].copy()
        if origin.shape != (2,) or extent.shape != (2,):
            raise ValueError("grid needs 2-d origin and extent")
        if (extent < 0).any() or not np.isfinite(origin).all() or not np.isfinite(extent).all():
            raise ValueError("grid extent must be finite and non-negative")
        origin.setflags(write=False)
        extent.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "extent", extent)

    @classmethod
    def covering(cls, box: Mbr, resolution: int) -> "Grid":
        return cls(box.lo[:2], box.hi[:2] - box.lo[:2], resolution)

    @property
    def side(self) -> int:
        return 1 << self.resolution

    def cell_of(self, p) -> tuple[int, int]:
        """Integer cell coordinates of one point; raises if it lies outside."""
        q = np.asarray(p, dtype=np.float64).ravel()
        cell = []
        for i in range(2):
            v = float(q[i]) - float(self.origin[i])
            if v < 0.0 or v > float(self.extent[i]):
                raise ValueError(f"point lies outside the grid on axis {i}")
            if self.extent[i] == 0.0:
                cell.append(0)  # degenerate axis collapses to one column
                continue
            c = int(np.floor(v / (float(self.extent[i]) / self.side)))
            if c < 0:
                c = 0
            elif c >= self.side:
                c = self.side - 1
            cell.append(c)
        return cell[0], cell[1]

    def _cells_array(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = []
        for i in range(2):
            v = pts[:, i] - self.origin[i]
            if self.extent[i] == 0.0:
                out.append(np.zeros(pts.shape[0], dtype=np.int64))
                continue
            c = np.floor(v / (self.extent[i] / self.side)).astype(np.int64)
            np.clip(c, 0, self.side - 1, out=c)
            out.append(c)
        return out[0], out[1]

    def signature_of(self, points) -> np.ndarray:
        """Sorted unique Z-order ids of the cells a point set occupies.

        Points outside the grid rectangle occupy no cell and are ignored.
        """
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        inside = np.ones(pts.shape[0], dtype=bool)
        for i in range(2):
            v = pts[:, i] - self.origin[i]
            inside &= (v >= 0.0) & (v <= self.extent[i])
        pts = pts[inside]
        if pts.shape[0] == 0:
            return np.empty(0, dtype=np.int64)
        cx, cy = self._cells_array(pts)
        return np.unique(morton_encode(cx, cy, self.resolution))


def signature_intersection_size(a: np.ndarray, b: np.ndarray) -> int:
    """How many cell ids two signatures share."""
    return int(np.intersect1d(a, b, assume_unique=True).size)
