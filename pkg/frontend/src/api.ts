/** Typed client for the search service.
 *
 * Every request body is validated against its schema before it leaves
 * and every response is parsed through one on the way in, so a drift
 * between UI and server surfaces as a loud ZodError instead of NaNs in
 * the map. The UI never derives a number itself; whatever it shows
 * came out of one of these parsers.
 */

import { z } from "zod";

export const METRICS = ["ia", "gbo", "haus_exact", "haus_approx"] as const;
export type Metric = (typeof METRICS)[number];

const point = z.array(z.number()).min(2);

export const datasetInfoSchema = z.object({
  id: z.number().int().nonnegative(),
  name: z.string(),
  point_count: z.number().int().nonnegative(),
  mbr: z.object({ lo: point, hi: point }),
});
export const datasetListSchema = z.array(datasetInfoSchema);

export const rangeRequestSchema = z.object({
  lo: point,
  hi: point,
});
export const rangeResponseSchema = z.object({
  ids: z.array(z.number().int()),
});

export const exemplarRequestSchema = z.object({
  points: z.array(point).min(1),
  metric: z.enum(METRICS),
  k: z.number().int().min(1),
  epsilon: z.number().positive().nullable().optional(),
});
export const hitSchema = z.object({
  id: z.number().int(),
  score: z.number(),
  rank: z.number().int().min(1),
});
export const exemplarResponseSchema = z.object({
  hits: z.array(hitSchema),
});

export const pointsRequestSchema = z.object({
  points: z.array(point).min(1),
});
export const pointsRangeResponseSchema = z.object({
  points: z.array(point),
});
export const nnPairSchema = z.object({
  query: point,
  nn: point,
  dist: z.number().nonnegative(),
});
export const nnResponseSchema = z.object({
  pairs: z.array(nnPairSchema),
});

export type DatasetInfo = z.infer<typeof datasetInfoSchema>;
export type RangeRequest = z.infer<typeof rangeRequestSchema>;
export type ExemplarRequest = z.infer<typeof exemplarRequestSchema>;
export type Hit = z.infer<typeof hitSchema>;
export type PointsRequest = z.infer<typeof pointsRequestSchema>;
export type NNPair = z.infer<typeof nnPairSchema>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`request failed (${status}): ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (input, init) =>
      fetch(input, init),
    private readonly base = "",
  ) {}

  listDatasets(signal?: AbortSignal): Promise<DatasetInfo[]> {
    return this.request("GET", "/datasets", undefined, datasetListSchema, signal);
  }

  searchRange(req: RangeRequest, signal?: AbortSignal) {
    return this.request(
      "POST",
      "/search/datasets/range",
      rangeRequestSchema.parse(req),
      rangeResponseSchema,
      signal,
    );
  }

  searchExemplar(req: ExemplarRequest, signal?: AbortSignal) {
    return this.request(
      "POST",
      "/search/datasets/exemplar",
      exemplarRequestSchema.parse(req),
      exemplarResponseSchema,
      signal,
    );
  }

  pointsRange(datasetId: number, req: RangeRequest, signal?: AbortSignal) {
    return this.request(
      "POST",
      `/datasets/${datasetId}/points/range`,
      rangeRequestSchema.parse(req),
      pointsRangeResponseSchema,
      signal,
    );
  }

  pointsNN(datasetId: number, req: PointsRequest, signal?: AbortSignal) {
    return this.request(
      "POST",
      `/datasets/${datasetId}/points/nn`,
      pointsRequestSchema.parse(req),
      nnResponseSchema,
      signal,
    );
  }

  private async request<T>(
    method: "GET" | "POST",
    path: string,
    body: unknown,
    schema: z.ZodType<T>,
    signal?: AbortSignal,
  ): Promise<T> {
    const init: RequestInit = { method, signal: signal ?? null };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.base + path, init);
    const text = await res.text();
    let doc: unknown = null;
    if (text.length > 0) {
      try {
        doc = JSON.parse(text);
      } catch {
        doc = null;
      }
    }
    if (!res.ok) {
      throw new ApiError(res.status, extractDetail(doc) ?? text.slice(0, 200));
    }
    return schema.parse(doc);
  }
}

function extractDetail(doc: unknown): string | null {
  if (doc !== null && typeof doc === "object" && "detail" in doc) {
    const d = (doc as { detail: unknown }).detail;
    if (typeof d === "string") return d;
    return JSON.stringify(d);
  }
  return null;
}

/** One in-flight task per panel: starting a new one aborts the old.
 *
 * A run superseded by a newer submission resolves to null rather than
 * rejecting, so callers can simply ignore it; real failures still
 * reject.
 */
export class LatestOnly {
  private ctrl: AbortController | null = null;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.ctrl?.abort();
    const ctrl = new AbortController();
    this.ctrl = ctrl;
    try {
      const value = await task(ctrl.signal);
      return ctrl.signal.aborted ? null : value;
    } catch (err) {
      if (ctrl.signal.aborted) return null;
      throw err;
    } finally {
      if (this.ctrl === ctrl) this.ctrl = null;
    }
  }

  abort(): void {
    this.ctrl?.abort();
    this.ctrl = null;
  }
}
