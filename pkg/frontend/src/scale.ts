/** World-to-screen mapping for the SVG plane (y flipped, aspect kept). */

export interface Box {
  lo: [number, number];
  hi: [number, number];
}

export interface Transform {
  sx(x: number): number;
  sy(y: number): number;
  /** screen back to world, for drawing queries with the mouse */
  ix(px: number): number;
  iy(py: number): number;
}

export function unionBox(boxes: readonly Box[]): Box | null {
  if (boxes.length === 0) return null;
  const lo: [number, number] = [Infinity, Infinity];
  const hi: [number, number] = [-Infinity, -Infinity];
  for (const b of boxes) {
    for (const a of [0, 1] as const) {
      if (b.lo[a] < lo[a]) lo[a] = b.lo[a];
      if (b.hi[a] > hi[a]) hi[a] = b.hi[a];
    }
  }
  return { lo, hi };
}

export function boxOfPoints(points: readonly number[][]): Box | null {
  if (points.length === 0) return null;
  const lo: [number, number] = [Infinity, Infinity];
  const hi: [number, number] = [-Infinity, -Infinity];
  for (const p of points) {
    const x = p[0] ?? 0;
    const y = p[1] ?? 0;
    if (x < lo[0]) lo[0] = x;
    if (y < lo[1]) lo[1] = y;
    if (x > hi[0]) hi[0] = x;
    if (y > hi[1]) hi[1] = y;
  }
  return { lo, hi };
}

export function fitTransform(
  world: Box,
  width: number,
  height: number,
  pad = 16,
): Transform {
  // zero-extent axes still need a nonzero span to divide by
  const wx = Math.max(world.hi[0] - world.lo[0], 1e-12);
  const wy = Math.max(world.hi[1] - world.lo[1], 1e-12);
  const scale = Math.min((width - 2 * pad) / wx, (height - 2 * pad) / wy);
  const ox = (width - scale * wx) / 2;
  const oy = (height - scale * wy) / 2;
  return {
    sx: (x) => ox + (x - world.lo[0]) * scale,
    sy: (y) => height - oy - (y - world.lo[1]) * scale,
    ix: (px) => world.lo[0] + (px - ox) / scale,
    iy: (py) => world.lo[1] + (height - oy - py) / scale,
  };
}
