/** DOM wiring for the three panels.
 *
 * Everything numeric on screen came out of an API response parser; this
 * file only moves data between fetches, the url-hash state and the pure
 * renderers. Each panel owns one LatestOnly lane, so a newer submission
 * cancels whatever the panel had in flight.
 */

import {
  ApiClient,
  ApiError,
  LatestOnly,
  METRICS,
  type DatasetInfo,
  type ExemplarRequest,
  type Metric,
  type NNPair,
} from "./api.js";
import { downsample, type Sampled } from "./downsample.js";
import {
  colorFor,
  renderBadge,
  renderBoxOutline,
  renderDatasetSummary,
  renderHitsTable,
  renderNNSegments,
  renderNNTable,
  renderPointCloud,
  renderQueryMarks,
  type HitRow,
} from "./render.js";
import {
  boxOfPoints,
  fitTransform,
  unionBox,
  type Box,
  type Transform,
} from "./scale.js";
import { DEFAULT_STATE, decodeState, encodeState, type AppState } from "./state.js";

const VIEW_W = 640;
const VIEW_H = 480;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setLayer(id: string, markup: string): void {
  const g = document.getElementById(id);
  if (g) g.innerHTML = markup;
}

function fmtErr(err: unknown): string {
  if (err instanceof ApiError || err instanceof Error) return err.message;
  return String(err);
}

/** Short form for coordinates the user drew with the mouse. These are
 * query inputs, not response values, so trimming digits is fine. */
function fmtCoord(v: number): string {
  return String(Number(v.toPrecision(6)));
}

/** x,y pairs from freeform text: one pair per line or ;-separated,
 * comma or whitespace between the coordinates. */
export function parseQueryPoints(text: string): number[][] {
  const out: number[][] = [];
  for (const chunk of text.split(/[\n;]+/)) {
    const trimmed = chunk.trim();
    if (!trimmed) continue;
    const nums = trimmed.split(/[,\s]+/).filter(Boolean).map(Number);
    if (nums.length < 2 || nums.slice(0, 2).some((v) => !Number.isFinite(v))) {
      throw new Error(`bad point: "${trimmed.slice(0, 40)}"`);
    }
    out.push([nums[0] as number, nums[1] as number]);
  }
  return out;
}

export function parseCorner(text: string): [number, number] {
  const nums = text.split(/[,\s]+/).filter(Boolean).map(Number);
  if (nums.length !== 2 || nums.some((v) => !Number.isFinite(v))) {
    throw new Error(`bad corner "${text.slice(0, 40)}", want x,y`);
  }
  return [nums[0] as number, nums[1] as number];
}

function normBox(a: readonly [number, number], b: readonly [number, number]): Box {
  return {
    lo: [Math.min(a[0], b[0]), Math.min(a[1], b[1])],
    hi: [Math.max(a[0], b[0]), Math.max(a[1], b[1])],
  };
}

function mbrBox(d: DatasetInfo): Box {
  return {
    lo: [d.mbr.lo[0] ?? 0, d.mbr.lo[1] ?? 0],
    hi: [d.mbr.hi[0] ?? 0, d.mbr.hi[1] ?? 0],
  };
}

class App {
  private state: AppState = { ...DEFAULT_STATE };
  private readonly api = new ApiClient();
  private readonly searchLane = new LatestOnly();
  private readonly detailLane = new LatestOnly();
  private readonly pointLane = new LatestOnly();

  private readonly datasets = new Map<number, DatasetInfo>();
  private readonly names = new Map<number, string>();
  private world: Box | null = null;

  private hits: HitRow[] = [];
  private overlays = new Set<number>();
  private detailAll: number[][] | null = null;
  private detailSample: Sampled<number[]> | null = null;
  private rangePoints: number[][] | null = null;
  private nnPairs: NNPair[] | null = null;
  private lastT: Transform | null = null;

  async boot(): Promise<void> {
    this.wire();
    try {
      const infos = await this.api.listDatasets();
      for (const d of infos) {
        this.datasets.set(d.id, d);
        this.names.set(d.id, d.name);
      }
      this.world = unionBox(infos.map(mbrBox));
      const total = infos.reduce((s, d) => s + d.point_count, 0);
      el("repo-info").textContent = `${infos.length} datasets, ${total} points`;
    } catch (err) {
      el("repo-info").textContent = fmtErr(err);
      return;
    }
    this.state = decodeState(location.hash);
    this.stateToForm();
    this.redraw();
    if (this.state.query) await this.runSearch();
    if (this.state.selected !== null) await this.openDetail(this.state.selected);
    if (this.state.pointQuery?.kind === "rect") await this.runPointRange();
    else if (this.state.pointQuery?.kind === "nn") await this.runNN();
  }

  // ---- form <-> state ----------------------------------------------

  private queryKind(): string {
    const checked = document.querySelector<HTMLInputElement>(
      'input[name="qkind"]:checked',
    );
    return checked?.value ?? "rect";
  }

  private toggleQueryFields(): void {
    const pointy = this.queryKind() === "points";
    el("rect-fields").hidden = pointy;
    el("points-fields").hidden = !pointy;
  }

  private formToState(): void {
    if (this.queryKind() === "rect") {
      const lo = parseCorner(el<HTMLInputElement>("rect-lo").value);
      const hi = parseCorner(el<HTMLInputElement>("rect-hi").value);
      this.state.query = { kind: "rect", lo, hi };
    } else {
      const pts = parseQueryPoints(el<HTMLTextAreaElement>("query-points").value);
      if (pts.length === 0) throw new Error("no query points given");
      this.state.query = { kind: "points", points: pts };
    }
    const metric = el<HTMLSelectElement>("metric").value;
    this.state.metric = (METRICS as readonly string[]).includes(metric)
      ? (metric as Metric)
      : DEFAULT_STATE.metric;
    const k = Number(el<HTMLInputElement>("k").value);
    this.state.k = Number.isInteger(k) && k >= 1 ? k : DEFAULT_STATE.k;
    const eps = Number(el<HTMLInputElement>("eps").value);
    this.state.epsilon = Number.isFinite(eps) && eps > 0 ? eps : null;
  }

  private stateToForm(): void {
    const q = this.state.query;
    const radios = document.querySelectorAll<HTMLInputElement>('input[name="qkind"]');
    for (const r of radios) r.checked = r.value === (q?.kind === "points" ? "points" : "rect");
    if (q?.kind === "rect") {
      el<HTMLInputElement>("rect-lo").value = `${q.lo[0]},${q.lo[1]}`;
      el<HTMLInputElement>("rect-hi").value = `${q.hi[0]},${q.hi[1]}`;
    } else if (q?.kind === "points") {
      el<HTMLTextAreaElement>("query-points").value = q.points
        .map((p) => `${p[0]},${p[1]}`)
        .join("\n");
    }
    this.toggleQueryFields();
    el<HTMLSelectElement>("metric").value = this.state.metric;
    el<HTMLInputElement>("k").value = String(this.state.k);
    if (this.state.epsilon !== null) {
      el<HTMLInputElement>("eps").value = String(this.state.epsilon);
    }
    el("eps-label").hidden = this.state.metric !== "haus_approx";
    el<HTMLInputElement>("cap").value = String(this.state.cap);
    const pq = this.state.pointQuery;
    if (pq?.kind === "rect") {
      el<HTMLInputElement>("p-lo").value = `${pq.lo[0]},${pq.lo[1]}`;
      el<HTMLInputElement>("p-hi").value = `${pq.hi[0]},${pq.hi[1]}`;
    }
  }

  private syncHash(): void {
    const hash = "#" + encodeState(this.state);
    // replaceState keeps the history clean; some doms no-op on relative
    // urls, so fall back to the hash setter if the url did not move
    try {
      history.replaceState(null, "", hash);
    } catch {
      /* fall through */
    }
    if (location.hash !== hash) location.hash = hash;
  }

  // ---- dataset search ----------------------------------------------

  private async runSearch(): Promise<void> {
    const q = this.state.query;
    if (!q) return;
    const status = el("search-status");
    status.textContent = "searching…";
    try {
      if (q.kind === "rect") {
        const res = await this.searchLane.run((signal) =>
          this.api.searchRange({ lo: [...q.lo], hi: [...q.hi] }, signal),
        );
        if (res === null) return; // superseded by a newer submission
        this.hits = res.ids.map((id, i) => ({ rank: i + 1, id, score: null }));
        status.textContent = `${res.ids.length} datasets intersect the box`;
      } else {
        const req: ExemplarRequest = {
          points: q.points,
          metric: this.state.metric,
          k: this.state.k,
        };
        if (this.state.metric === "haus_approx" && this.state.epsilon !== null) {
          req.epsilon = this.state.epsilon;
        }
        const res = await this.searchLane.run((signal) =>
          this.api.searchExemplar(req, signal),
        );
        if (res === null) return;
        this.hits = res.hits;
        status.textContent = `top ${res.hits.length} by ${this.state.metric}`;
      }
    } catch (err) {
      status.textContent = fmtErr(err);
      return;
    }
    for (const id of [...this.overlays]) {
      if (!this.hits.some((h) => h.id === id)) this.overlays.delete(id);
    }
    this.renderHits();
    this.updateNNButton();
    this.redraw();
  }

  private renderHits(): void {
    el("hits").innerHTML = renderHitsTable(
      this.hits,
      this.names,
      this.overlays,
      this.state.selected,
    );
  }

  // ---- drill-down ---------------------------------------------------

  private async openDetail(id: number): Promise<void> {
    const info = this.datasets.get(id);
    if (!info) {
      el("search-status").textContent = `unknown dataset ${id}`;
      return;
    }
    this.state.selected = id;
    this.syncHash();
    el("panel-detail").hidden = false;
    el("detail-meta").innerHTML = renderDatasetSummary(info);
    el("detail-badge").textContent = "loading points…";
    this.rangePoints = null;
    this.nnPairs = null;
    el("nn-results").innerHTML = "";
    this.updateNNButton();
    this.renderHits();
    try {
      const res = await this.detailLane.run((signal) =>
        this.api.pointsRange(id, mbrBox(info), signal),
      );
      if (res === null) return;
      this.detailAll = res.points;
    } catch (err) {
      el("detail-badge").textContent = fmtErr(err);
      return;
    }
    this.resample();
  }

  private resample(): void {
    if (!this.detailAll) return;
    const sample = downsample(this.detailAll, this.state.cap);
    this.detailSample = sample;
    el("detail-badge").innerHTML = renderBadge(sample);
    this.redraw();
  }

  private updateNNButton(): void {
    el<HTMLButtonElement>("nn-btn").disabled =
      this.state.query?.kind !== "points" || this.state.selected === null;
  }

  // ---- point search -------------------------------------------------

  private async runPointRange(): Promise<void> {
    const id = this.state.selected;
    const pq = this.state.pointQuery;
    if (id === null || pq?.kind !== "rect") return;
    const status = el("point-status");
    status.textContent = "searching…";
    try {
      const res = await this.pointLane.run((signal) =>
        this.api.pointsRange(id, { lo: [...pq.lo], hi: [...pq.hi] }, signal),
      );
      if (res === null) return;
      this.rangePoints = res.points;
      this.nnPairs = null;
      el("nn-results").innerHTML = "";
      status.textContent = `${res.points.length} points in the box`;
    } catch (err) {
      status.textContent = fmtErr(err);
      return;
    }
    this.redraw();
  }

  private async runNN(): Promise<void> {
    const id = this.state.selected;
    const q = this.state.query;
    if (id === null || q?.kind !== "points") return;
    const status = el("point-status");
    status.textContent = "searching…";
    try {
      const res = await this.pointLane.run((signal) =>
        this.api.pointsNN(id, { points: q.points }, signal),
      );
      if (res === null) return;
      this.nnPairs = res.pairs;
      this.rangePoints = null;
      el("nn-results").innerHTML = renderNNTable(res.pairs);
      status.textContent = `${res.pairs.length} nearest-neighbor pairs`;
    } catch (err) {
      status.textContent = fmtErr(err);
      return;
    }
    this.redraw();
  }

  // ---- map ------------------------------------------------------------

  private redraw(): void {
    const content: Box[] = [];
    for (const id of this.overlays) {
      const d = this.datasets.get(id);
      if (d) content.push(mbrBox(d));
    }
    const q = this.state.query;
    if (q?.kind === "rect") content.push({ lo: [...q.lo], hi: [...q.hi] });
    else if (q?.kind === "points") {
      const b = boxOfPoints(q.points);
      if (b) content.push(b);
    }
    if (this.state.selected !== null) {
      const d = this.datasets.get(this.state.selected);
      if (d) content.push(mbrBox(d));
    }
    const pq = this.state.pointQuery;
    if (pq?.kind === "rect") content.push({ lo: [...pq.lo], hi: [...pq.hi] });

    const fallback = this.world ? [this.world] : [];
    const world =
      unionBox(content.length > 0 ? content : fallback) ??
      ({ lo: [0, 0], hi: [1, 1] } as Box);
    const t = fitTransform(world, VIEW_W, VIEW_H);
    this.lastT = t;

    let overlayMarkup = "";
    for (const id of this.overlays) {
      const d = this.datasets.get(id);
      if (!d) continue;
      const row = this.hits.findIndex((h) => h.id === id);
      overlayMarkup += renderBoxOutline(
        mbrBox(d),
        t,
        colorFor(row < 0 ? 0 : row),
        `${id} ${d.name}`,
      );
    }
    setLayer("layer-overlays", overlayMarkup);

    let queryMarkup = "";
    if (q?.kind === "rect") {
      queryMarkup = renderBoxOutline({ lo: [...q.lo], hi: [...q.hi] }, t, "#111");
    } else if (q?.kind === "points") {
      queryMarkup = renderQueryMarks(q.points, t);
    }
    setLayer("layer-query", queryMarkup);

    let detailMarkup = "";
    if (this.state.selected !== null) {
      const d = this.datasets.get(this.state.selected);
      if (d) detailMarkup += renderBoxOutline(mbrBox(d), t, "#475569");
      if (this.detailSample) {
        detailMarkup += renderPointCloud(this.detailSample.shown, t, "#94a3b8");
      }
    }
    setLayer("layer-detail", detailMarkup);

    let pointsMarkup = "";
    if (pq?.kind === "rect") {
      pointsMarkup += renderBoxOutline({ lo: [...pq.lo], hi: [...pq.hi] }, t, "#d97706");
    }
    if (this.rangePoints) {
      pointsMarkup += renderPointCloud(this.rangePoints, t, "#d97706", 2.5);
    }
    if (this.nnPairs) {
      pointsMarkup += renderNNSegments(this.nnPairs, t, "#dc2626");
    }
    setLayer("layer-points", pointsMarkup);
  }

  // ---- events ---------------------------------------------------------

  private wire(): void {
    el<HTMLFormElement>("search-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      try {
        this.formToState();
      } catch (err) {
        el("search-status").textContent = fmtErr(err);
        return;
      }
      this.syncHash();
      void this.runSearch();
    });

    for (const r of document.querySelectorAll<HTMLInputElement>('input[name="qkind"]')) {
      r.addEventListener("change", () => this.toggleQueryFields());
    }

    el<HTMLSelectElement>("metric").addEventListener("change", () => {
      el("eps-label").hidden = el<HTMLSelectElement>("metric").value !== "haus_approx";
    });

    el<HTMLInputElement>("points-file").addEventListener("change", async () => {
      const f = el<HTMLInputElement>("points-file").files?.[0];
      if (!f) return;
      el<HTMLTextAreaElement>("query-points").value = await f.text();
      const radio = document.querySelector<HTMLInputElement>(
        'input[name="qkind"][value="points"]',
      );
      if (radio) radio.checked = true;
      this.toggleQueryFields();
    });

    const hits = el("hits");
    hits.addEventListener("click", (ev) => {
      const btn = (ev.target as Element).closest<HTMLElement>("[data-view]");
      if (btn) void this.openDetail(Number(btn.dataset["view"]));
    });
    hits.addEventListener("change", (ev) => {
      const box = ev.target as HTMLInputElement;
      const idText = box.dataset?.["overlay"];
      if (idText === undefined) return;
      const id = Number(idText);
      if (box.checked) this.overlays.add(id);
      else this.overlays.delete(id);
      this.redraw();
    });

    el<HTMLInputElement>("cap").addEventListener("change", () => {
      const v = Number(el<HTMLInputElement>("cap").value);
      if (!Number.isInteger(v) || v < 1) return;
      this.state.cap = v;
      this.syncHash();
      this.resample();
    });

    el<HTMLFormElement>("point-form").addEventListener("submit", (ev) => {
      ev.preventDefault();
      try {
        const lo = parseCorner(el<HTMLInputElement>("p-lo").value);
        const hi = parseCorner(el<HTMLInputElement>("p-hi").value);
        this.state.pointQuery = { kind: "rect", lo, hi };
      } catch (err) {
        el("point-status").textContent = fmtErr(err);
        return;
      }
      this.syncHash();
      void this.runPointRange();
    });

    el<HTMLButtonElement>("nn-btn").addEventListener("click", () => {
      this.state.pointQuery = { kind: "nn" };
      this.syncHash();
      void this.runNN();
    });

    this.wireDrag();
  }

  /** Drag on the map sketches a rectangle: into the point-search form
   * when a dataset is open, into the dataset-search form otherwise. */
  private wireDrag(): void {
    const svg = el("map");
    let start: [number, number] | null = null;

    const toWorld = (ev: PointerEvent): [number, number] | null => {
      if (!this.lastT) return null;
      const r = svg.getBoundingClientRect();
      if (r.width <= 0 || r.height <= 0) return null;
      const px = ((ev.clientX - r.left) / r.width) * VIEW_W;
      const py = ((ev.clientY - r.top) / r.height) * VIEW_H;
      return [this.lastT.ix(px), this.lastT.iy(py)];
    };

    svg.addEventListener("pointerdown", (ev) => {
      start = toWorld(ev);
      if (start) svg.setPointerCapture(ev.pointerId);
    });
    svg.addEventListener("pointermove", (ev) => {
      if (!start || !this.lastT) return;
      const cur = toWorld(ev);
      if (!cur) return;
      setLayer("layer-ghost", renderBoxOutline(normBox(start, cur), this.lastT, "#0ea5e9"));
    });
    svg.addEventListener("pointerup", (ev) => {
      setLayer("layer-ghost", "");
      if (!start) return;
      const s = start;
      start = null;
      const cur = toWorld(ev);
      if (!cur) return;
      if (cur[0] === s[0] && cur[1] === s[1]) return; // a click, not a drag
      const box = normBox(s, cur);
      const lo = `${fmtCoord(box.lo[0])},${fmtCoord(box.lo[1])}`;
      const hi = `${fmtCoord(box.hi[0])},${fmtCoord(box.hi[1])}`;
      if (!el("panel-detail").hidden) {
        el<HTMLInputElement>("p-lo").value = lo;
        el<HTMLInputElement>("p-hi").value = hi;
      } else {
        const radio = document.querySelector<HTMLInputElement>(
          'input[name="qkind"][value="rect"]',
        );
        if (radio) radio.checked = true;
        this.toggleQueryFields();
        el<HTMLInputElement>("rect-lo").value = lo;
        el<HTMLInputElement>("rect-hi").value = hi;
      }
    });
    svg.addEventListener("pointercancel", () => {
      start = null;
      setLayer("layer-ghost", "");
    });
  }
}

/** resolves once the page finished booting; tests await it */
export let appReady: Promise<void> | null = null;

// tests import the parsers above; only a real page has the dom to boot
if (typeof document !== "undefined" && document.getElementById("map")) {
  appReady = new App().boot();
}
