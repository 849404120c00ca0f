// Complex-plane view: the replicate cloud of f(omega) at one frequency,
// with Cartesian (median/quantile cross) and polar (modulus/argument arcs)
// overlays taken verbatim from the server summary.

import type { ComplexPayload } from "./types";

export const VIEW_SIZE = 320;
const SVG_NS = "http://www.w3.org/2000/svg";

export interface ComplexHandle {
  payload: ComplexPayload;
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

export function renderComplexView(
  container: HTMLElement,
  payload: ComplexPayload
): ComplexHandle {
  container.textContent = "";

  const caption = document.createElement("div");
  caption.className = "complex-caption";
  caption.textContent = `f(ω) replicates at ω = ${payload.omega}`;
  container.appendChild(caption);

  const svg = svgEl("svg", {
    width: String(VIEW_SIZE),
    height: String(VIEW_SIZE),
    class: "complex-view",
  });
  container.appendChild(svg);

  const all = payload.re.concat(payload.im);
  let span = Math.max(...all.map((v) => Math.abs(v)));
  if (!(span > 0)) span = 1;
  span *= 1.15;
  const scale = (v: number) => (VIEW_SIZE / 2) * (1 + v / span);
  const scaleY = (v: number) => (VIEW_SIZE / 2) * (1 - v / span);

  svg.appendChild(
    svgEl("line", {
      x1: "0", y1: String(VIEW_SIZE / 2), x2: String(VIEW_SIZE), y2: String(VIEW_SIZE / 2),
      class: "axis",
    })
  );
  svg.appendChild(
    svgEl("line", {
      x1: String(VIEW_SIZE / 2), y1: "0", x2: String(VIEW_SIZE / 2), y2: String(VIEW_SIZE),
      class: "axis",
    })
  );

  payload.re.forEach((re, i) => {
    svg.appendChild(
      svgEl("circle", {
        cx: String(scale(re)),
        cy: String(scaleY(payload.im[i])),
        r: "3",
        class: "replicate-dot",
        "data-re": String(re),
        "data-im": String(payload.im[i]),
      })
    );
  });

  // Cartesian overlay: median point and quantile box
  const [reMed, reLo, reHi] = payload.summary.re;
  const [imMed, imLo, imHi] = payload.summary.im;
  svg.appendChild(
    svgEl("rect", {
      x: String(scale(reLo)),
      y: String(scaleY(imHi)),
      width: String(scale(reHi) - scale(reLo)),
      height: String(scaleY(imLo) - scaleY(imHi)),
      class: "cartesian-box",
    })
  );
  svg.appendChild(
    svgEl("circle", {
      cx: String(scale(reMed)),
      cy: String(scaleY(imMed)),
      r: "5",
      class: "cartesian-median",
    })
  );

  // Polar overlay: modulus circles at the quantiles, argument spokes
  for (const mod of [payload.summary.modulus[1], payload.summary.modulus[2]]) {
    svg.appendChild(
      svgEl("circle", {
        cx: String(VIEW_SIZE / 2),
        cy: String(VIEW_SIZE / 2),
        r: String((mod / span) * (VIEW_SIZE / 2)),
        class: "polar-ring",
      })
    );
  }
  for (const arg of payload.summary.argument) {
    const modMed = payload.summary.modulus[0];
    svg.appendChild(
      svgEl("line", {
        x1: String(VIEW_SIZE / 2),
        y1: String(VIEW_SIZE / 2),
        x2: String(scale(1.1 * modMed * Math.cos(arg))),
        y2: String(scaleY(1.1 * modMed * Math.sin(arg))),
        class: "polar-spoke",
      })
    );
  }

  return { payload };
}
