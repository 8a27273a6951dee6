import { ApiError, fetchPerception, fetchStacks, fetchStereoImage } from "./api.js";
import { RenderScheduler } from "./scheduler.js";
import { createState, nudgeU, ranges, setMode, setParam } from "./state.js";
import type { NumericParam } from "./state.js";
import type { DisplayMode, PerceptionReadout, StackMeta, ViewerState } from "./types.js";

const BASE = "";   // same origin as the viewer service

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const stackSelect = $<HTMLSelectElement>("stack");
const image = $<HTMLImageElement>("view");
const banner = $<HTMLDivElement>("banner");
const panel = $<HTMLDivElement>("perception");
const targetHeightInput = $<HTMLInputElement>("target-height");

let state: ViewerState | null = null;
let objectUrl: string | null = null;

interface RenderResult {
  blob: Blob;
  perception: PerceptionReadout;
}

const scheduler = new RenderScheduler<ViewerState, RenderResult>({
  fetcher: async (s, signal) => {
    const targetHeight = parseFloat(targetHeightInput.value) || 1.8;
    const [blob, perception] = await Promise.all([
      fetchStereoImage(BASE, s, signal),
      fetchPerception(BASE, s, targetHeight, signal),
    ]);
    return { blob, perception };
  },
  onResult: (result) => {
    if (objectUrl) URL.revokeObjectURL(objectUrl);
    objectUrl = URL.createObjectURL(result.blob);
    image.src = objectUrl;
    renderPerception(result.perception);
    banner.hidden = true;
  },
  onError: (error) => {
    // non-blocking: keep the last good image, surface the constraint text
    if (error instanceof ApiError) {
      banner.textContent = error.constraint
        ? `${error.message} — ${error.constraint}`
        : error.message;
    } else {
      banner.textContent = String(error);
    }
    banner.hidden = false;
  },
});

function renderPerception(p: PerceptionReadout): void {
  const fmt = (v: number | null, digits = 3) =>
    v === null || Number.isNaN(v) ? "—" : v.toFixed(digits);
  const flag = (ok: boolean, label: string) =>
    `<span class="flag ${ok ? "ok" : "bad"}">${label}: ${ok ? "yes" : "no"}</span>`;
  panel.innerHTML = `
    <div>disparity ${fmt(p.disparity_arcmin, 2)}&prime; (${fmt(p.disparity_m * 1000, 2)} mm)</div>
    <div>PTH ${fmt(p.pth)} m &nbsp; JDDI ${fmt(p.jddi)} m</div>
    <div>gradient ${fmt(p.gradient)}</div>
    <div>${flag(p.detectable, "depth detectable")} ${flag(p.fusible, "fusible")}
         ${p.beyond_infinity ? '<span class="flag bad">beyond infinity</span>' : ""}</div>`;
}

function applyState(next: ViewerState): void {
  state = next;
  const r = ranges(next);
  for (const name of ["u", "a", "ef", "h"] as const) {
    const slider = $<HTMLInputElement>(`slider-${name}`);
    const label = $<HTMLSpanElement>(`value-${name}`);
    slider.min = String(r[name].min);
    slider.max = String(r[name].max);
    slider.step = String(r[name].step);
    slider.value = String(next[name]);
    label.textContent = `${next[name].toFixed(2)} m`;
  }
  const modeButton = $<HTMLButtonElement>("mode");
  modeButton.textContent = next.mode === "anaglyph" ? "anaglyph" : "side-by-side";
  scheduler.request(next);
}

function bindControls(): void {
  for (const name of ["u", "a", "ef", "h"] as const) {
    $<HTMLInputElement>(`slider-${name}`).addEventListener("input", (ev) => {
      if (!state) return;
      const value = parseFloat((ev.target as HTMLInputElement).value);
      applyState(setParam(state, name as NumericParam, value));
    });
  }
  $<HTMLButtonElement>("mode").addEventListener("click", () => {
    if (!state) return;
    const next: DisplayMode = state.mode === "anaglyph" ? "sbs" : "anaglyph";
    applyState(setMode(state, next));
  });
  targetHeightInput.addEventListener("change", () => {
    if (state) scheduler.request(state);
  });
  document.addEventListener("keydown", (ev) => {
    if (!state) return;
    if (ev.key === "ArrowLeft") applyState(nudgeU(state, -1));
    if (ev.key === "ArrowRight") applyState(nudgeU(state, 1));
  });
}

async function start(): Promise<void> {
  let stacks: StackMeta[] = [];
  try {
    stacks = await fetchStacks(BASE);
  } catch (error) {
    banner.textContent = `service unreachable: ${String(error)}`;
    banner.hidden = false;
    return;
  }
  if (!stacks.length) {
    banner.textContent = "no scan stacks in the data directory";
    banner.hidden = false;
    return;
  }
  for (const meta of stacks) {
    const opt = document.createElement("option");
    opt.value = meta.id;
    opt.textContent = `${meta.id} (${meta.frames} frames, ${meta.path_length} m path)`;
    stackSelect.appendChild(opt);
  }
  const byId = new Map(stacks.map((m) => [m.id, m]));
  stackSelect.addEventListener("change", () => {
    const meta = byId.get(stackSelect.value);
    if (meta) applyState(createState(meta));
  });
  bindControls();
  applyState(createState(stacks[0]));
}

start();
