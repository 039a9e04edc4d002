/**
 * Readers for the simulator's public file formats.
 *
 * The renderer never mutates inputs and validates them eagerly; a schema
 * mismatch reports the offending column or key by name.
 */

import { readFileSync } from "fs";

export class SchemaError extends Error {}

export const SERIES_COLUMNS = [
  "t", "mass", "kinetic", "trap", "interaction", "angular", "energy",
  "free_energy", "J", "dJ", "virial_residual", "grad_norm", "sigma_norm",
  "boundary_mass", "tail_fraction",
] as const;

export type SeriesRow = Record<(typeof SERIES_COLUMNS)[number], number>;

function parseCsv(path: string, required: readonly string[]): Record<string, number | string>[] {
  const text = readFileSync(path, "utf-8");
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  const header = (lines[0] ?? "").split(",").map((h) => h.trim());
  for (const col of required) {
    if (!header.includes(col)) {
      throw new SchemaError(`${path}: missing column '${col}'`);
    }
  }
  const rows: Record<string, number | string>[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== header.length) {
      throw new SchemaError(`${path}: row has ${parts.length} fields, header has ${header.length}`);
    }
    const row: Record<string, number | string> = {};
    header.forEach((name, i) => {
      const raw = (parts[i] ?? "").trim();
      const num = Number(raw);
      row[name] = Number.isFinite(num) && raw !== "" ? num : raw;
    });
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new SchemaError(`${path}: no data rows`);
  }
  return rows;
}

export function readSeries(path: string): SeriesRow[] {
  const rows = parseCsv(path, SERIES_COLUMNS);
  return rows.map((r) => {
    const out = {} as SeriesRow;
    for (const col of SERIES_COLUMNS) {
      const v = r[col];
      if (typeof v !== "number") {
        throw new SchemaError(`${path}: column '${col}' holds non-numeric data`);
      }
      out[col] = v;
    }
    return out;
  });
}

export interface EvolveSummary {
  kind: string;
  status: string;
  t_detect: number | null;
  params: { omega: number; gamma: number; p: number; kappa: number };
}

export interface SweepSummaryRow {
  c: number;
  verdict: string;
  outcome: string;
  t_detect: number | null;
}

export interface SweepSummary {
  kind: string;
  family: string;
  reference_mass: number;
  transition_c: number | null;
  rows: SweepSummaryRow[];
}

function readJson(path: string): Record<string, unknown> {
  const data = JSON.parse(readFileSync(path, "utf-8"));
  if (typeof data !== "object" || data === null) {
    throw new SchemaError(`${path}: not a JSON object`);
  }
  return data as Record<string, unknown>;
}

function need<T>(obj: Record<string, unknown>, key: string, path: string): T {
  if (!(key in obj)) {
    throw new SchemaError(`${path}: missing key '${key}'`);
  }
  return obj[key] as T;
}

export function readEvolveSummary(path: string): EvolveSummary {
  const data = readJson(path);
  const params = need<Record<string, unknown>>(data, "params", path);
  for (const key of ["omega", "gamma", "p", "kappa"]) {
    if (typeof params[key] !== "number") {
      throw new SchemaError(`${path}: missing key 'params.${key}'`);
    }
  }
  return {
    kind: need<string>(data, "kind", path),
    status: need<string>(data, "status", path),
    t_detect: (data["t_detect"] ?? null) as number | null,
    params: params as unknown as EvolveSummary["params"],
  };
}

export function readSweepSummary(path: string): SweepSummary {
  const data = readJson(path);
  const rows = need<unknown[]>(data, "rows", path);
  if (!Array.isArray(rows) || rows.length === 0) {
    throw new SchemaError(`${path}: key 'rows' must be a non-empty array`);
  }
  const parsed = rows.map((raw, i) => {
    const row = raw as Record<string, unknown>;
    for (const key of ["c", "verdict", "outcome"]) {
      if (!(key in row)) {
        throw new SchemaError(`${path}: rows[${i}] missing key '${key}'`);
      }
    }
    return {
      c: row["c"] as number,
      verdict: row["verdict"] as string,
      outcome: row["outcome"] as string,
      t_detect: (row["t_detect"] ?? null) as number | null,
    };
  });
  return {
    kind: need<string>(data, "kind", path),
    family: need<string>(data, "family", path),
    reference_mass: need<number>(data, "reference_mass", path),
    transition_c: (data["transition_c"] ?? null) as number | null,
    rows: parsed,
  };
}

export const VORTEX_COLUMNS = [
  "m", "kinetic", "trap", "angular", "interaction", "energy",
  "analytic_energy", "tail",
] as const;

export type VortexRow = Record<(typeof VORTEX_COLUMNS)[number], number>;

export function readVortexCsv(path: string): VortexRow[] {
  const rows = parseCsv(path, VORTEX_COLUMNS);
  return rows.map((r) => {
    const out = {} as VortexRow;
    for (const col of VORTEX_COLUMNS) {
      const v = r[col];
      if (typeof v !== "number") {
        throw new SchemaError(`${path}: column '${col}' holds non-numeric data`);
      }
      out[col] = v;
    }
    return out;
  });
}

export interface StabilityPoint {
  t: number;
  distance: number;
  direction: string;
}

export function readStabilityCsv(path: string): StabilityPoint[] {
  const rows = parseCsv(path, ["t", "distance", "direction"]);
  return rows.map((r) => ({
    t: r["t"] as number,
    distance: r["distance"] as number,
    direction: String(r["direction"]),
  }));
}
