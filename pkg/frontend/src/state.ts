// Pure viewer-state logic: parameter clamping keeps every reachable state
// inside the feasibility region advertised by the stack metadata, so the
// controls can never request an invalid render (e_f <= path - a at all times).

import type { DisplayMode, Range, StackMeta, ViewerState } from "./types.js";

const round3 = (v: number) => Math.round(v * 1000) / 1000;

export function createState(meta: StackMeta): ViewerState {
  const center = round3((meta.x_min + meta.x_max) / 2);
  const a = Math.min(2, meta.path_length);
  return {
    stackId: meta.id,
    meta,
    u: center,
    a,
    ef: Math.min(1, round3(meta.path_length - a)),
    h: meta.altitude,
    mode: "anaglyph",
  };
}

export function ranges(state: ViewerState): { u: Range; a: Range; ef: Range; h: Range } {
  const m = state.meta;
  const step = m.spacing > 0 ? m.spacing : 0.5;
  return {
    u: { min: m.x_min, max: m.x_max, step },
    a: { min: 0, max: m.path_length, step },
    // live feasibility clamp: widening the aperture shrinks the baseline room
    ef: { min: 0, max: round3(m.path_length - state.a), step },
    h: { min: Math.max(1, m.altitude - 6), max: m.altitude, step: 0.1 },
  };
}

function clamp(v: number, r: Range): number {
  return Math.min(r.max, Math.max(r.min, v));
}

export type NumericParam = "u" | "a" | "ef" | "h";

export function setParam(state: ViewerState, name: NumericParam, value: number): ViewerState {
  const next = { ...state, [name]: round3(value) } as ViewerState;
  const r = ranges(next);
  next.u = clamp(next.u, r.u);
  next.a = clamp(next.a, r.a);
  next.h = clamp(next.h, r.h);
  next.ef = clamp(next.ef, r.ef);   // after a, so the shrunken max applies
  return next;
}

export function setMode(state: ViewerState, mode: DisplayMode): ViewerState {
  return { ...state, mode };
}

/** Arrow-key navigation: move the viewpoint by exactly one sampling step. */
export function nudgeU(state: ViewerState, direction: -1 | 1): ViewerState {
  const step = state.meta.spacing > 0 ? state.meta.spacing : 0.5;
  return setParam(state, "u", state.u + direction * step);
}

export function sameRenderParams(a: ViewerState, b: ViewerState): boolean {
  return a.stackId === b.stackId && a.u === b.u && a.a === b.a &&
    a.ef === b.ef && a.h === b.h && a.mode === b.mode;
}
