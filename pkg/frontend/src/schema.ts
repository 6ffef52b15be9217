/**
 * Parsers for the simulator's public file formats: the batch summary
 * (CSV or its JSON twin, schema version 1) and the episode trace
 * (JSON Lines with a header object, schema version 1).
 *
 * Everything fails fast: a version or header mismatch throws SchemaError
 * before any figure is produced.
 */

import { readFileSync } from "node:fs";

export const SUMMARY_SCHEMA_VERSION = 1;
export const TRACE_SCHEMA_VERSION = 1;

export const SUMMARY_HEADER = [
  "controller",
  "family",
  "mt1_succ",
  "mt1_unsucc",
  "mt2_mean",
  "mt2_std",
  "mt3",
  "mt4_mean",
  "mt4_std",
] as const;

export class SchemaError extends Error {}

export interface SummaryRow {
  controller: string;
  family: string;
  mt1_succ: number;
  mt1_unsucc: number;
  mt2_mean: number;
  mt2_std: number;
  mt3: number;
  mt4_mean: number;
  mt4_std: number;
}

function toNumber(raw: string | number, field: string): number {
  const v = typeof raw === "number" ? raw : Number(raw);
  if (!Number.isFinite(v)) {
    throw new SchemaError(`non-numeric value ${JSON.stringify(raw)} for ${field}`);
  }
  return v;
}

export function parseSummaryCsv(text: string): SummaryRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty summary file");
  }
  const header = lines[0].split(",");
  if (header.join(",") !== SUMMARY_HEADER.join(",")) {
    throw new SchemaError(`unexpected summary header: ${lines[0]}`);
  }
  return lines.slice(1).map((line, i) => {
    const cells = line.split(",");
    if (cells.length !== SUMMARY_HEADER.length) {
      throw new SchemaError(`summary row ${i + 1} has ${cells.length} cells`);
    }
    return {
      controller: cells[0],
      family: cells[1],
      mt1_succ: toNumber(cells[2], "mt1_succ"),
      mt1_unsucc: toNumber(cells[3], "mt1_unsucc"),
      mt2_mean: toNumber(cells[4], "mt2_mean"),
      mt2_std: toNumber(cells[5], "mt2_std"),
      mt3: toNumber(cells[6], "mt3"),
      mt4_mean: toNumber(cells[7], "mt4_mean"),
      mt4_std: toNumber(cells[8], "mt4_std"),
    };
  });
}

export function parseSummaryJson(text: string): SummaryRow[] {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`summary JSON does not parse: ${err}`);
  }
  const obj = doc as { schema_version?: number; rows?: unknown[] };
  if (obj.schema_version !== SUMMARY_SCHEMA_VERSION) {
    throw new SchemaError(`unsupported summary schema version ${obj.schema_version}`);
  }
  if (!Array.isArray(obj.rows)) {
    throw new SchemaError("summary JSON has no rows array");
  }
  return obj.rows.map((r, i) => {
    const row = r as Record<string, unknown>;
    const out: Partial<SummaryRow> = {
      controller: String(row.controller),
      family: String(row.family),
    };
    for (const field of SUMMARY_HEADER.slice(2)) {
      (out as Record<string, number | string>)[field] = toNumber(
        row[field] as number,
        `rows[${i}].${field}`,
      );
    }
    return out as SummaryRow;
  });
}

export function loadSummary(path: string): SummaryRow[] {
  const text = readFileSync(path, "utf8");
  const rows = path.endsWith(".json") ? parseSummaryJson(text) : parseSummaryCsv(text);
  if (rows.length === 0) {
    throw new SchemaError("summary contains no rows");
  }
  return rows;
}

export interface TraceHeader {
  schema_version: number;
  kind: string;
  family: string;
  seed: number;
  controller: string;
  dt: number;
  outcome: string;
  n_ticks: number;
}

export interface TraceTick {
  t: number;
  time: number;
  ego_position: number;
  ego_velocity: number;
  accel_out: number;
  v_ref: number;
  fsm: string;
  ttc: number | null;
  [key: string]: unknown;
}

export interface Trace {
  header: TraceHeader;
  ticks: TraceTick[];
}

export function parseTraceJsonl(text: string): Trace {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) {
    throw new SchemaError("trace file needs a header line and at least one tick");
  }
  const header = JSON.parse(lines[0]) as TraceHeader;
  if (header.schema_version !== TRACE_SCHEMA_VERSION || header.kind !== "trace") {
    throw new SchemaError(
      `unsupported trace header (version ${header.schema_version}, kind ${header.kind})`,
    );
  }
  const ticks = lines.slice(1).map((l, i) => {
    const tick = JSON.parse(l) as TraceTick;
    for (const field of ["time", "ego_position", "ego_velocity", "fsm", "accel_out"]) {
      if (!(field in tick)) {
        throw new SchemaError(`trace tick ${i} missing ${field}`);
      }
    }
    return tick;
  });
  if (ticks.length !== header.n_ticks) {
    throw new SchemaError(`trace header says ${header.n_ticks} ticks, file has ${ticks.length}`);
  }
  return { header, ticks };
}

export function loadTrace(path: string): Trace {
  return parseTraceJsonl(readFileSync(path, "utf8"));
}
