/** Pure renderers: data in, markup string out.
 *
 * Nothing here touches the document or reformats a number — scores and
 * distances are stringified with String(), which round-trips the JSON
 * value exactly, so what the table shows is literally what the API
 * sent. The contract tests lean on both properties.
 */

import type { DatasetInfo, NNPair } from "./api.js";
import type { Sampled } from "./downsample.js";
import { badgeText } from "./downsample.js";
import type { Box, Transform } from "./scale.js";

const PALETTE = [
  "#2563eb",
  "#dc2626",
  "#059669",
  "#d97706",
  "#7c3aed",
  "#0891b2",
  "#be185d",
  "#4d7c0f",
];

export function colorFor(i: number): string {
  return PALETTE[i % PALETTE.length] as string;
}

export function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

/** One table row per result. Exemplar hits carry a score; range hits
 * carry none (the endpoint returns bare ids), shown as a dash rather
 * than any locally invented number. */
export interface HitRow {
  rank: number;
  id: number;
  score: number | null;
}

/** Ranked hits exactly as the API ordered them; one row per hit. */
export function renderHitsTable(
  hits: readonly HitRow[],
  names: ReadonlyMap<number, string>,
  overlays: ReadonlySet<number>,
  selected: number | null,
): string {
  if (hits.length === 0) {
    return `<p class="empty">no matching datasets</p>`;
  }
  const rows = hits
    .map((h, i) => {
      const name = names.get(h.id) ?? "";
      const cls = h.id === selected ? ` class="selected"` : "";
      const checked = overlays.has(h.id) ? " checked" : "";
      return (
        `<tr${cls} data-id="${h.id}">` +
        `<td>${h.rank}</td>` +
        `<td>${h.id}</td>` +
        `<td>${esc(name)}</td>` +
        `<td class="score">${h.score === null ? "&mdash;" : String(h.score)}</td>` +
        `<td><input type="checkbox" data-overlay="${h.id}"` +
        ` style="accent-color:${colorFor(i)}"${checked}></td>` +
        `<td><button data-view="${h.id}">inspect</button></td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th>rank</th><th>id</th><th>name</th>` +
    `<th>score</th><th>map</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function renderBadge(s: Sampled<unknown>): string {
  const cls = s.sampled ? "badge sampled" : "badge";
  return `<span class="${cls}">${esc(badgeText(s))}</span>`;
}

export function renderBoxOutline(
  box: Box,
  t: Transform,
  color: string,
  label?: string,
): string {
  const x = t.sx(box.lo[0]);
  const y = t.sy(box.hi[1]);
  const w = t.sx(box.hi[0]) - x;
  const h = t.sy(box.lo[1]) - y;
  const tag =
    label === undefined
      ? ""
      : `<text x="${x + 3}" y="${y + 12}" fill="${color}">${esc(label)}</text>`;
  return (
    `<rect x="${x}" y="${y}" width="${w}" height="${h}"` +
    ` fill="${color}" fill-opacity="0.06" stroke="${color}"/>` + tag
  );
}

export function renderPointCloud(
  points: readonly number[][],
  t: Transform,
  color: string,
  r = 2,
): string {
  return points
    .map(
      (p) =>
        `<circle cx="${t.sx(p[0] ?? 0)}" cy="${t.sy(p[1] ?? 0)}" r="${r}"` +
        ` fill="${color}" fill-opacity="0.7"/>`,
    )
    .join("");
}

export function renderQueryMarks(
  points: readonly number[][],
  t: Transform,
): string {
  return points
    .map((p) => {
      const x = t.sx(p[0] ?? 0);
      const y = t.sy(p[1] ?? 0);
      return (
        `<path d="M${x - 4},${y} L${x + 4},${y} M${x},${y - 4} L${x},${y + 4}"` +
        ` stroke="#111" stroke-width="1.5" class="qmark"/>`
      );
    })
    .join("");
}

/** Query-to-neighbor segments plus a table of the exact distances. */
export function renderNNSegments(
  pairs: readonly NNPair[],
  t: Transform,
  color: string,
): string {
  return pairs
    .map((p) => {
      const x1 = t.sx(p.query[0] ?? 0);
      const y1 = t.sy(p.query[1] ?? 0);
      const x2 = t.sx(p.nn[0] ?? 0);
      const y2 = t.sy(p.nn[1] ?? 0);
      return (
        `<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}"` +
        ` stroke="${color}" stroke-dasharray="3 2" class="nnseg">` +
        `<title>${String(p.dist)}</title></line>` +
        `<circle cx="${x2}" cy="${y2}" r="3" fill="${color}"/>`
      );
    })
    .join("");
}

export function renderNNTable(pairs: readonly NNPair[]): string {
  if (pairs.length === 0) return `<p class="empty">no pairs</p>`;
  const rows = pairs
    .map(
      (p) =>
        `<tr><td>${p.query.slice(0, 2).join(", ")}</td>` +
        `<td>${p.nn.slice(0, 2).join(", ")}</td>` +
        `<td class="dist">${String(p.dist)}</td></tr>`,
    )
    .join("");
  return (
    `<table><thead><tr><th>query</th><th>nearest</th><th>distance</th>` +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

export function renderDatasetSummary(info: DatasetInfo): string {
  return (
    `<dl class="meta"><dt>dataset</dt><dd>${info.id} ${esc(info.name)}</dd>` +
    `<dt>points</dt><dd>${info.point_count}</dd>` +
    `<dt>extent</dt><dd>[${info.mbr.lo.slice(0, 2).join(", ")}] to ` +
    `[${info.mbr.hi.slice(0, 2).join(", ")}]</dd></dl>`
  );
}
