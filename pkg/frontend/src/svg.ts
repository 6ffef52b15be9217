/**
 * Minimal deterministic SVG construction: same input, same bytes.
 * No timestamps, no randomness, numbers via JavaScript's shortest
 * round-trip formatting.
 */

export interface Margin {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const WIDTH = 800;
export const HEIGHT = 480;
export const MARGIN: Margin = { top: 48, right: 24, bottom: 56, left: 64 };

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function el(tag: string, attrs: Record<string, string | number>, body = ""): string {
  const a = Object.entries(attrs)
    .map(([k, v]) => `${k}="${typeof v === "number" ? String(v) : esc(v)}"`)
    .join(" ");
  return body === "" ? `<${tag} ${a}/>` : `<${tag} ${a}>${body}</${tag}>`;
}

export function text(x: number, y: number, s: string, anchor = "middle", size = 13): string {
  return el(
    "text",
    { x, y, "text-anchor": anchor, "font-family": "sans-serif", "font-size": size, fill: "#222" },
    esc(s),
  );
}

export function document(body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect x="0" y="0" width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    ...body,
    "</svg>",
    "",
  ].join("\n");
}

/** Linear scale from [d0, d1] to [r0, r1]. */
export function scale(d0: number, d1: number, r0: number, r1: number) {
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

/** 1/2/5-stepped tick positions covering [0, max]. */
export function ticks(max: number, target = 6): number[] {
  if (max <= 0) {
    return [0, 1];
  }
  const raw = max / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => max / s <= target) ?? 10 * mag;
  const out: number[] = [];
  for (let v = 0; v <= max + 1e-12; v += step) {
    out.push(Number(v.toFixed(12)));
  }
  return out;
}

export const CONTROLLER_COLORS: Record<string, string> = {
  B1: "#c44e52",
  B2: "#dd8452",
  B3: "#ccb974",
  proposed: "#4c72b0",
};

export function colorFor(controller: string): string {
  return CONTROLLER_COLORS[controller] ?? "#64b5cd";
}
