/**
 * The four figure kinds: stacked yields per controller (mt1), successful
 * finishes (mt3), emergency-braking time (mt4), and a single-episode
 * space-time/velocity plot from a trace file.
 *
 * Every bar carries data-controller/data-metric/data-value attributes so the
 * plotted numbers can be read back and checked against the input file.
 */

import { SchemaError, SummaryRow, Trace } from "./schema.js";
import { HEIGHT, MARGIN, WIDTH, colorFor, document, el, scale, text, ticks } from "./svg.js";

export type FigureKind = "yields" | "finishes" | "ebrake" | "trace";

export interface FigureSpec {
  kind: FigureKind;
  controllers?: string[];
  family?: string;
}

const SUCC_COLOR = "#55a868";
const UNSUCC_COLOR = "#c44e52";

function filterRows(rows: SummaryRow[], spec: FigureSpec): SummaryRow[] {
  let out = rows;
  if (spec.family) {
    out = out.filter((r) => r.family === spec.family);
  }
  if (spec.controllers && spec.controllers.length > 0) {
    out = out.filter((r) => spec.controllers!.includes(r.controller));
  }
  if (out.length === 0) {
    throw new SchemaError("no summary rows left after filtering");
  }
  const families = new Set(out.map((r) => r.family));
  if (families.size > 1) {
    throw new SchemaError(
      `summary covers families ${[...families].sort().join(", ")}; pass a family filter`,
    );
  }
  return out;
}

function plotArea() {
  return {
    x0: MARGIN.left,
    x1: WIDTH - MARGIN.right,
    y0: HEIGHT - MARGIN.bottom,
    y1: MARGIN.top,
  };
}

function yAxis(maxValue: number, label: string): { parts: string[]; y: (v: number) => number } {
  const { x0, x1, y0, y1 } = plotArea();
  const tk = ticks(maxValue);
  const y = scale(0, tk[tk.length - 1], y0, y1);
  const parts: string[] = [];
  for (const t of tk) {
    parts.push(el("line", { x1: x0, y1: y(t), x2: x1, y2: y(t), stroke: "#dddddd", "stroke-width": 1 }));
    parts.push(text(x0 - 8, y(t) + 4, String(t), "end", 12));
  }
  parts.push(el("line", { x1: x0, y1: y0, x2: x1, y2: y0, stroke: "#222222", "stroke-width": 1 }));
  parts.push(
    el(
      "text",
      {
        x: 18,
        y: (y0 + y1) / 2,
        "text-anchor": "middle",
        "font-family": "sans-serif",
        "font-size": 13,
        fill: "#222",
        transform: `rotate(-90 18 ${(y0 + y1) / 2})`,
      },
      label,
    ),
  );
  return { parts, y };
}

function barSlots(n: number): { centers: number[]; width: number } {
  const { x0, x1 } = plotArea();
  const slot = (x1 - x0) / n;
  return {
    centers: Array.from({ length: n }, (_, i) => x0 + slot * (i + 0.5)),
    width: Math.min(90, slot * 0.55),
  };
}

export function renderYields(rows: SummaryRow[], spec: FigureSpec): string {
  const data = filterRows(rows, spec);
  const maxTotal = Math.max(...data.map((r) => r.mt1_succ + r.mt1_unsucc));
  const { parts, y } = yAxis(maxTotal, "yield events");
  const { centers, width } = barSlots(data.length);
  const { y0 } = plotArea();
  data.forEach((r, i) => {
    const x = centers[i] - width / 2;
    const hSucc = y0 - y(r.mt1_succ);
    parts.push(
      el("rect", {
        x,
        y: y(r.mt1_succ),
        width,
        height: hSucc,
        fill: SUCC_COLOR,
        "data-controller": r.controller,
        "data-metric": "mt1_succ",
        "data-value": String(r.mt1_succ),
      }),
    );
    parts.push(
      el("rect", {
        x,
        y: y(r.mt1_succ + r.mt1_unsucc),
        width,
        height: y(r.mt1_succ) - y(r.mt1_succ + r.mt1_unsucc),
        fill: UNSUCC_COLOR,
        "data-controller": r.controller,
        "data-metric": "mt1_unsucc",
        "data-value": String(r.mt1_unsucc),
      }),
    );
    parts.push(text(centers[i], y0 + 20, r.controller));
    parts.push(text(centers[i], y(r.mt1_succ + r.mt1_unsucc) - 6, `${r.mt1_succ}/${r.mt1_unsucc}`, "middle", 11));
  });
  parts.push(text(WIDTH / 2, 26, `Successful and unsuccessful yields (${data[0].family})`, "middle", 16));
  // legend
  parts.push(el("rect", { x: WIDTH - 220, y: 40, width: 12, height: 12, fill: SUCC_COLOR }));
  parts.push(text(WIDTH - 202, 50, "successful", "start", 12));
  parts.push(el("rect", { x: WIDTH - 120, y: 40, width: 12, height: 12, fill: UNSUCC_COLOR }));
  parts.push(text(WIDTH - 102, 50, "unsuccessful", "start", 12));
  return document(parts);
}

function simpleBars(
  data: SummaryRow[],
  metric: "mt3" | "mt4_mean",
  label: string,
  title: string,
  stds?: number[],
): string {
  const values = data.map((r) => r[metric]);
  const maxV = Math.max(...values, ...(stds ? values.map((v, i) => v + stds[i]) : []));
  const { parts, y } = yAxis(maxV, label);
  const { centers, width } = barSlots(data.length);
  const { y0 } = plotArea();
  data.forEach((r, i) => {
    const v = r[metric];
    parts.push(
      el("rect", {
        x: centers[i] - width / 2,
        y: y(v),
        width,
        height: y0 - y(v),
        fill: colorFor(r.controller),
        "data-controller": r.controller,
        "data-metric": metric,
        "data-value": String(v),
      }),
    );
    if (stds) {
      parts.push(
        el("line", {
          x1: centers[i],
          y1: y(Math.max(0, v - stds[i])),
          x2: centers[i],
          y2: y(v + stds[i]),
          stroke: "#222222",
          "stroke-width": 1.5,
          "data-metric": `${metric}_std`,
          "data-value": String(stds[i]),
        }),
      );
    }
    parts.push(text(centers[i], y0 + 20, r.controller));
  });
  parts.push(text(WIDTH / 2, 26, title, "middle", 16));
  return document(parts);
}

export function renderFinishes(rows: SummaryRow[], spec: FigureSpec): string {
  const data = filterRows(rows, spec);
  return simpleBars(data, "mt3", "successful finishes", `Successful finishes (${data[0].family})`);
}

export function renderEbrake(rows: SummaryRow[], spec: FigureSpec): string {
  const data = filterRows(rows, spec);
  return simpleBars(
    data,
    "mt4_mean",
    "emergency braking time [s]",
    `Mean emergency-braking time (${data[0].family})`,
    data.map((r) => r.mt4_std),
  );
}

const FSM_COLORS: Record<string, string> = {
  normal_drive: "#4c72b0",
  steady_drive: "#dd8452",
  cautious_drive: "#ccb974",
  yielding: "#8172b3",
  emergency: "#c44e52",
};

export function renderTrace(trace: Trace): string {
  const { header, ticks: rows } = trace;
  const { x0, x1, y0, y1 } = plotArea();
  const mid = (y0 + y1) / 2;
  const tMax = rows[rows.length - 1].time;
  const xS = scale(0, tMax === 0 ? 1 : tMax, x0, x1);
  const posMax = Math.max(...rows.map((r) => r.ego_position), 1);
  const velMax = Math.max(...rows.map((r) => r.ego_velocity), ...rows.map((r) => r.v_ref), 1);
  const yPos = scale(0, posMax, mid - 12, y1);
  const yVel = scale(0, velMax, y0, mid + 24);

  const parts: string[] = [];
  // panel separators and axes
  parts.push(el("line", { x1: x0, y1: mid - 12, x2: x1, y2: mid - 12, stroke: "#222222", "stroke-width": 1 }));
  parts.push(el("line", { x1: x0, y1: y0, x2: x1, y2: y0, stroke: "#222222", "stroke-width": 1 }));
  for (const tt of ticks(tMax)) {
    parts.push(text(xS(tt), y0 + 18, String(tt), "middle", 11));
  }
  parts.push(text((x0 + x1) / 2, y0 + 36, "time [s]"));

  const posPts = rows.map((r) => `${xS(r.time)},${yPos(r.ego_position)}`).join(" ");
  parts.push(
    el("polyline", {
      points: posPts,
      fill: "none",
      stroke: "#4c72b0",
      "stroke-width": 1.6,
      "data-series": "position",
      "data-points": String(rows.length),
    }),
  );
  parts.push(text(x0 + 4, y1 + 14, "position [m]", "start", 12));

  // velocity, drawn per-FSM-state segment
  for (let i = 1; i < rows.length; i++) {
    parts.push(
      el("line", {
        x1: xS(rows[i - 1].time),
        y1: yVel(rows[i - 1].ego_velocity),
        x2: xS(rows[i].time),
        y2: yVel(rows[i].ego_velocity),
        stroke: FSM_COLORS[rows[i].fsm] ?? "#222222",
        "stroke-width": 1.6,
      }),
    );
  }
  const refPts = rows.map((r) => `${xS(r.time)},${yVel(r.v_ref)}`).join(" ");
  parts.push(
    el("polyline", {
      points: refPts,
      fill: "none",
      stroke: "#999999",
      "stroke-width": 1,
      "stroke-dasharray": "4 3",
      "data-series": "v_ref",
    }),
  );
  parts.push(text(x0 + 4, mid + 38, "velocity [m/s]", "start", 12));

  let lx = x0;
  for (const [state, color] of Object.entries(FSM_COLORS)) {
    parts.push(el("rect", { x: lx, y: 40, width: 10, height: 10, fill: color }));
    parts.push(text(lx + 14, 49, state.replace("_", " "), "start", 10));
    lx += 118;
  }
  parts.push(
    text(
      WIDTH / 2,
      26,
      `${header.controller} on ${header.family} seed ${header.seed}: ${header.outcome}`,
      "middle",
      16,
    ),
  );
  return document(parts);
}
