/** Query state <-> URL hash, so any search is a shareable link.
 *
 * The encoding is a plain query string (metric=ia&k=10&q=rect:0,0,5,5)
 * rather than packed JSON; hand-editable and diff-friendly. Decoding
 * is forgiving: anything malformed falls back to that field's default,
 * never throws.
 */

import { METRICS, type Metric } from "./api.js";

export type RectQuery = {
  kind: "rect";
  lo: [number, number];
  hi: [number, number];
};
export type PointsQuery = { kind: "points"; points: number[][] };
export type DatasetQuery = RectQuery | PointsQuery;
export type PointQuery = RectQuery | { kind: "nn" };

export interface AppState {
  query: DatasetQuery | null;
  metric: Metric;
  k: number;
  epsilon: number | null;
  selected: number | null;
  cap: number;
  pointQuery: PointQuery | null;
}

export const DEFAULT_STATE: AppState = {
  query: null,
  metric: "haus_exact",
  k: 10,
  epsilon: null,
  selected: null,
  cap: 2000,
  pointQuery: null,
};

function fmtPoints(points: number[][]): string {
  return points.map((p) => `${p[0]},${p[1]}`).join(";");
}

function parsePoints(text: string): number[][] | null {
  const out: number[][] = [];
  for (const part of text.split(";")) {
    if (!part) continue;
    const nums = part.split(",").map(Number);
    if (nums.length < 2 || nums.some((v) => !Number.isFinite(v))) return null;
    out.push(nums.slice(0, 2));
  }
  return out.length > 0 ? out : null;
}

function fmtRect(q: RectQuery): string {
  return `rect:${q.lo[0]},${q.lo[1]},${q.hi[0]},${q.hi[1]}`;
}

function parseRect(text: string): RectQuery | null {
  const nums = text.split(",").map(Number);
  if (nums.length !== 4 || nums.some((v) => !Number.isFinite(v))) return null;
  const [x0, y0, x1, y1] = nums as [number, number, number, number];
  if (x0 > x1 || y0 > y1) return null;
  return { kind: "rect", lo: [x0, y0], hi: [x1, y1] };
}

export function encodeState(s: AppState): string {
  const p = new URLSearchParams();
  if (s.query?.kind === "rect") p.set("q", fmtRect(s.query));
  else if (s.query?.kind === "points") p.set("q", `pts:${fmtPoints(s.query.points)}`);
  p.set("metric", s.metric);
  p.set("k", String(s.k));
  if (s.epsilon !== null) p.set("eps", String(s.epsilon));
  if (s.selected !== null) p.set("sel", String(s.selected));
  if (s.cap !== DEFAULT_STATE.cap) p.set("cap", String(s.cap));
  if (s.pointQuery?.kind === "rect") p.set("pq", fmtRect(s.pointQuery));
  else if (s.pointQuery?.kind === "nn") p.set("pq", "nn");
  return p.toString();
}

export function decodeState(text: string): AppState {
  const s: AppState = { ...DEFAULT_STATE };
  let p: URLSearchParams;
  try {
    p = new URLSearchParams(text.replace(/^#/, ""));
  } catch {
    return s;
  }

  const q = p.get("q");
  if (q?.startsWith("rect:")) s.query = parseRect(q.slice(5));
  else if (q?.startsWith("pts:")) {
    const pts = parsePoints(q.slice(4));
    if (pts) s.query = { kind: "points", points: pts };
  }

  const metric = p.get("metric");
  if (metric && (METRICS as readonly string[]).includes(metric)) {
    s.metric = metric as Metric;
  }

  const k = Number(p.get("k"));
  if (Number.isInteger(k) && k >= 1) s.k = k;

  const eps = p.get("eps");
  if (eps !== null) {
    const v = Number(eps);
    if (Number.isFinite(v) && v > 0) s.epsilon = v;
  }

  const sel = p.get("sel");
  if (sel !== null) {
    const v = Number(sel);
    if (Number.isInteger(v) && v >= 0) s.selected = v;
  }

  const cap = Number(p.get("cap"));
  if (Number.isInteger(cap) && cap >= 1) s.cap = cap;

  const pq = p.get("pq");
  if (pq === "nn") s.pointQuery = { kind: "nn" };
  else if (pq?.startsWith("rect:")) s.pointQuery = parseRect(pq.slice(5));

  return s;
}
