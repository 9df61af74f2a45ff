/** Pure DOM/SVG rendering of one analysis result: score gauge, waveform
 * envelope with red difference overlays, and the two-point distance plot
 * with the session trajectory. Everything is drawn from server payloads;
 * nothing is recomputed client-side. */

import type { AnalysisResult, DifferenceSegment } from "./types.js";

export const CLIP_DURATION_S = 4.0;
const SVG_NS = "http://www.w3.org/2000/svg";

/** Overlay opacity: darker where the attention deviation is larger,
 * with a floor so even weak segments stay visible. */
export function overlayOpacity(intensity: number): number {
  return 0.25 + 0.75 * Math.max(0, Math.min(1, intensity));
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

function clear(el: Element): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

/** Radial 0-100 meter; the numeric readout is the payload's display value. */
export function renderScore(root: HTMLElement, result: AnalysisResult): void {
  clear(root);
  const svg = svgEl("svg", { viewBox: "0 0 120 70", class: "score-gauge" });
  svg.appendChild(
    svgEl("path", {
      d: "M 10 60 A 50 50 0 0 1 110 60",
      fill: "none",
      stroke: "#ddd",
      "stroke-width": 10,
    }),
  );
  const frac = Math.max(0, Math.min(100, result.display)) / 100;
  const angle = Math.PI * (1 - frac);
  const x = 60 + 50 * Math.cos(angle);
  const y = 60 - 50 * Math.sin(angle);
  svg.appendChild(
    svgEl("path", {
      d: `M 10 60 A 50 50 0 ${frac > 0.5 ? 1 : 0} 1 ${x.toFixed(2)} ${y.toFixed(2)}`,
      fill: "none",
      stroke: "#2d7ff9",
      "stroke-width": 10,
      class: "score-arc",
    }),
  );
  root.appendChild(svg);
  const label = document.createElement("div");
  label.className = "score-value";
  label.textContent = String(result.display);
  root.appendChild(label);
}

/** Envelope polyline plus one red rect per difference segment; rect spans
 * map start_s/end_s linearly onto the drawing width. */
export function renderWaveform(
  root: HTMLElement,
  preview: number[],
  segments: DifferenceSegment[],
  width = 1000,
  height = 120,
): void {
  clear(root);
  const svg = svgEl("svg", {
    viewBox: `0 0 ${width} ${height}`,
    class: "waveform",
    preserveAspectRatio: "none",
  });
  const mid = height / 2;
  const pts: string[] = [];
  const n = preview.length;
  for (let i = 0; i < n; i++) {
    const x = (i / Math.max(1, n - 1)) * width;
    pts.push(`${x.toFixed(1)},${(mid - preview[i] * mid).toFixed(1)}`);
  }
  for (let i = n - 1; i >= 0; i--) {
    const x = (i / Math.max(1, n - 1)) * width;
    pts.push(`${x.toFixed(1)},${(mid + preview[i] * mid).toFixed(1)}`);
  }
  svg.appendChild(
    svgEl("polygon", { points: pts.join(" "), fill: "#9bb8d4", class: "envelope" }),
  );
  for (const seg of segments) {
    const x = (seg.start_s / CLIP_DURATION_S) * width;
    const w = ((seg.end_s - seg.start_s) / CLIP_DURATION_S) * width;
    svg.appendChild(
      svgEl("rect", {
        x: x.toFixed(2),
        y: 0,
        width: w.toFixed(2),
        height,
        fill: "red",
        "fill-opacity": overlayOpacity(seg.intensity).toFixed(3),
        class: "difference-overlay",
      }),
    );
  }
  root.appendChild(svg);
}

/** Two-point distance plot: red anchor at the origin, blue current point,
 * prior attempts as fading dots joined by a trajectory polyline. The axis
 * scale only ever grows (max observed radius x 1.2) so movement toward
 * the origin reads as monotone. */
export function renderScatter(
  root: HTMLElement,
  current: [number, number],
  trajectory: [number, number][],
  scaleRadius: number,
  size = 240,
): void {
  clear(root);
  const svg = svgEl("svg", { viewBox: `0 0 ${size} ${size}`, class: "scatter" });
  const c = size / 2;
  const px = (p: [number, number]): [number, number] => [
    c + (p[0] / scaleRadius) * c * 0.9,
    c - (p[1] / scaleRadius) * c * 0.9,
  ];
  svg.appendChild(
    svgEl("line", { x1: 0, y1: c, x2: size, y2: c, stroke: "#eee", class: "axis" }),
  );
  svg.appendChild(
    svgEl("line", { x1: c, y1: 0, x2: c, y2: size, stroke: "#eee", class: "axis" }),
  );
  const all = [...trajectory, current];
  if (all.length > 1) {
    svg.appendChild(
      svgEl("polyline", {
        points: all.map((p) => px(p).map((v) => v.toFixed(1)).join(",")).join(" "),
        fill: "none",
        stroke: "#2d7ff9",
        "stroke-opacity": 0.5,
        class: "trajectory",
      }),
    );
  }
  trajectory.forEach((p, i) => {
    const [x, y] = px(p);
    svg.appendChild(
      svgEl("circle", {
        cx: x.toFixed(1),
        cy: y.toFixed(1),
        r: 4,
        fill: "#2d7ff9",
        // older attempts fade out
        "fill-opacity": (0.15 + (0.5 * (i + 1)) / (trajectory.length + 1)).toFixed(3),
        class: "trail-point",
      }),
    );
  });
  svg.appendChild(
    svgEl("circle", { cx: c, cy: c, r: 6, fill: "red", class: "anchor-point" }),
  );
  const [ux, uy] = px(current);
  svg.appendChild(
    svgEl("circle", {
      cx: ux.toFixed(1),
      cy: uy.toFixed(1),
      r: 6,
      fill: "blue",
      class: "user-point",
    }),
  );
  root.appendChild(svg);
}
