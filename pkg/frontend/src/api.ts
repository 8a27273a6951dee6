import type { PerceptionReadout, ServiceError, StackMeta, ViewerState } from "./types.js";

export function stereoUrl(base: string, s: ViewerState): string {
  const q = new URLSearchParams({
    u: String(s.u), a: String(s.a), ef: String(s.ef), h: String(s.h), mode: s.mode,
  });
  return `${base}/stacks/${encodeURIComponent(s.stackId)}/stereo?${q}`;
}

export function perceptionUrl(base: string, s: ViewerState, targetHeight: number): string {
  const q = new URLSearchParams({
    ht: String(targetHeight),
    ef: String(s.ef),
    vf: String(s.h),
    fovf: String(s.meta.fov_deg),
  });
  return `${base}/perception?${q}`;
}

export class ApiError extends Error {
  constraint?: string;
  status: number;

  constructor(status: number, body: ServiceError) {
    super(body.error);
    this.status = status;
    this.constraint = body.constraint;
  }
}

async function raiseFor(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let body: ServiceError = { error: `HTTP ${resp.status}` };
  try {
    body = (await resp.json()) as ServiceError;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ApiError(resp.status, body);
}

export async function fetchStacks(base: string): Promise<StackMeta[]> {
  const resp = await raiseFor(await fetch(`${base}/stacks`));
  return (await resp.json()) as StackMeta[];
}

export async function fetchStereoImage(base: string, s: ViewerState,
                                       signal: AbortSignal): Promise<Blob> {
  const resp = await raiseFor(await fetch(stereoUrl(base, s), { signal }));
  return await resp.blob();
}

export async function fetchPerception(base: string, s: ViewerState, targetHeight: number,
                                      signal: AbortSignal): Promise<PerceptionReadout> {
  const resp = await raiseFor(await fetch(perceptionUrl(base, s, targetHeight), { signal }));
  return (await resp.json()) as PerceptionReadout;
}
