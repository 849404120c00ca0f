// The four linked Co/Quad/Amplitude/Phase panels.
//
// Each panel draws the local (blue) and global (red) medians with their
// pointwise ribbons, straight from the server payload: no statistic is
// recomputed client-side.  The exact arrays used for drawing are kept on
// the panel root (renderedSeries) so tests can pin rendered values to the
// payload.  Frequencies flagged by the phase branch-cut warning get tick
// markers on the phase panel; clicking anywhere in a panel reports the
// nearest grid frequency.

import type { BandCurve, CurveName, SpectraPayload } from "./types";
import { CURVE_NAMES } from "./types";

export const PANEL_WIDTH = 420;
export const PANEL_HEIGHT = 180;
const MARGIN = { left: 46, right: 8, top: 18, bottom: 22 };

export interface RenderedPanel {
  curve: CurveName;
  omega: number[];
  local: BandCurve;
  global: BandCurve;
  branchCut: boolean[] | null;
}

export interface PanelsHandle {
  rendered: Record<CurveName, RenderedPanel>;
  configHash: string;
}

const SVG_NS = "http://www.w3.org/2000/svg";

interface Scale {
  x(w: number): number;
  y(v: number): number;
}

function makeScale(omega: number[], values: number[][]): Scale {
  const w0 = omega[0];
  const w1 = omega[omega.length - 1];
  let lo = Infinity;
  let hi = -Infinity;
  for (const arr of values) {
    for (const v of arr) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
  }
  if (!(hi > lo)) {
    hi = lo + 1;
    lo -= 1;
  }
  const pad = 0.06 * (hi - lo);
  lo -= pad;
  hi += pad;
  const innerW = PANEL_WIDTH - MARGIN.left - MARGIN.right;
  const innerH = PANEL_HEIGHT - MARGIN.top - MARGIN.bottom;
  return {
    x: (w) => MARGIN.left + ((w - w0) / (w1 - w0)) * innerW,
    y: (v) => MARGIN.top + ((hi - v) / (hi - lo)) * innerH,
  };
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

function linePoints(omega: number[], values: number[], scale: Scale): string {
  return omega.map((w, i) => `${scale.x(w)},${scale.y(values[i])}`).join(" ");
}

function ribbonPoints(omega: number[], band: BandCurve, scale: Scale): string {
  const upper = omega.map((w, i) => `${scale.x(w)},${scale.y(band.upper[i])}`);
  const lower = omega
    .slice()
    .reverse()
    .map((w, i) => {
      const j = omega.length - 1 - i;
      return `${scale.x(w)},${scale.y(band.lower[j])}`;
    });
  return upper.concat(lower).join(" ");
}

function drawPanel(
  curve: CurveName,
  payload: SpectraPayload,
  pinned: number[],
  onPick: (omega: number) => void
): SVGSVGElement {
  const omega = payload.omega;
  const local = payload.local.curves[curve];
  const global = payload.global.curves[curve];
  const svg = el("svg", {
    width: String(PANEL_WIDTH),
    height: String(PANEL_HEIGHT),
    class: `panel panel-${curve}`,
    "data-curve": curve,
  });
  const scale = makeScale(omega, [
    local.lower,
    local.upper,
    local.median,
    global.lower,
    global.upper,
    global.median,
  ]);

  svg.appendChild(
    el("polygon", {
      points: ribbonPoints(omega, global, scale),
      class: "ribbon ribbon-global",
    })
  );
  svg.appendChild(
    el("polygon", {
      points: ribbonPoints(omega, local, scale),
      class: "ribbon ribbon-local",
    })
  );
  svg.appendChild(
    el("polyline", {
      points: linePoints(omega, global.median, scale),
      class: "median median-global",
    })
  );
  svg.appendChild(
    el("polyline", {
      points: linePoints(omega, local.median, scale),
      class: "median median-local",
    })
  );

  for (const pin of pinned) {
    svg.appendChild(
      el("line", {
        x1: String(scale.x(pin)),
        x2: String(scale.x(pin)),
        y1: String(MARGIN.top),
        y2: String(PANEL_HEIGHT - MARGIN.bottom),
        class: "pin-marker",
      })
    );
  }

  if (curve === "phase" && payload.local.phase_branch_cut) {
    payload.local.phase_branch_cut.forEach((flagged, i) => {
      if (!flagged) return;
      svg.appendChild(
        el("line", {
          x1: String(scale.x(omega[i])),
          x2: String(scale.x(omega[i])),
          y1: String(PANEL_HEIGHT - MARGIN.bottom),
          y2: String(PANEL_HEIGHT - MARGIN.bottom + 6),
          class: "branch-cut-marker",
          "data-omega": String(omega[i]),
        })
      );
    });
  }

  const title = el("text", {
    x: String(MARGIN.left),
    y: "12",
    class: "panel-title",
  });
  title.textContent = curve;
  svg.appendChild(title);

  svg.addEventListener("click", (event: MouseEvent) => {
    const rect = svg.getBoundingClientRect();
    const px = event.clientX - rect.left;
    let best = 0;
    let bestDist = Infinity;
    for (let i = 0; i < omega.length; i += 1) {
      const d = Math.abs(scale.x(omega[i]) - px);
      if (d < bestDist) {
        bestDist = d;
        best = i;
      }
    }
    onPick(omega[best]);
  });

  return svg;
}

export function renderPanels(
  container: HTMLElement,
  payload: SpectraPayload,
  pinned: number[] = [],
  onPick: (omega: number) => void = () => {}
): PanelsHandle {
  container.textContent = "";

  const badge = document.createElement("div");
  badge.className = payload.nc.ok ? "nc-badge nc-ok" : "nc-badge nc-fail";
  badge.textContent = payload.nc.ok
    ? "NC OK"
    : `NC FAIL (${payload.nc.local_flagged}/${payload.nc.r})`;
  container.appendChild(badge);

  const hashLabel = document.createElement("div");
  hashLabel.className = "config-hash";
  hashLabel.textContent = payload.config_hash;
  container.appendChild(hashLabel);

  const cachedLabel = document.createElement("span");
  cachedLabel.className = "cached-flag";
  cachedLabel.textContent = payload.cached ? "cached" : "computed";
  container.appendChild(cachedLabel);

  const rendered = {} as Record<CurveName, RenderedPanel>;
  for (const curve of CURVE_NAMES) {
    const svg = drawPanel(curve, payload, pinned, onPick);
    container.appendChild(svg);
    rendered[curve] = {
      curve,
      omega: payload.omega,
      local: payload.local.curves[curve],
      global: payload.global.curves[curve],
      branchCut: curve === "phase" ? payload.local.phase_branch_cut : null,
    };
  }
  return { rendered, configHash: payload.config_hash };
}
