/** Display down-sampling: above the cap, keep a uniform random subset
 * in original order and say so. The rng is injectable so tests get
 * deterministic picks.
 */

export interface Sampled<T> {
  shown: T[];
  total: number;
  sampled: boolean;
}

export function downsample<T>(
  items: readonly T[],
  cap: number,
  rng: () => number = Math.random,
): Sampled<T> {
  if (cap < 1) throw new RangeError("cap must be at least 1");
  if (items.length <= cap) {
    return { shown: [...items], total: items.length, sampled: false };
  }
  // Floyd's subset sampling: cap distinct indices, uniform over subsets
  const picked = new Set<number>();
  for (let j = items.length - cap; j < items.length; j++) {
    const t = Math.floor(rng() * (j + 1));
    picked.add(picked.has(t) ? j : t);
  }
  const idx = [...picked].sort((a, b) => a - b);
  return {
    shown: idx.map((i) => items[i] as T),
    total: items.length,
    sampled: true,
  };
}

export function badgeText(s: Sampled<unknown>): string {
  return s.sampled
    ? `showing ${s.shown.length} of ${s.total} points`
    : `showing all ${s.total} points`;
}
