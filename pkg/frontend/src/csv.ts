/**
 * Readers for the frozen result-bundle schemas.
 *
 * summary.csv columns:
 *   strength,p_eff,strategy,mode,M,runs,mean_delta_e,std_delta_e,final_energy,exact_energy
 * fits.csv columns:
 *   kind,strategy,a,b
 *
 * Numeric cells keep their original strings alongside the parsed values so
 * annotations can quote the producer's output verbatim.
 */

import { readFileSync } from "node:fs";

export const SUMMARY_COLUMNS = [
  "strength", "p_eff", "strategy", "mode", "M", "runs",
  "mean_delta_e", "std_delta_e", "final_energy", "exact_energy",
] as const;

export const FITS_COLUMNS = ["kind", "strategy", "a", "b"] as const;

export interface SummaryRow {
  strength: number;
  p_eff: number;
  strategy: string;
  mode: string;
  M: number;
  runs: number;
  mean_delta_e: number;
  std_delta_e: number;
  final_energy: number;
  exact_energy: number;
}

export interface FitRow {
  kind: string;
  strategy: string;
  a: number;
  b: number;
  aText: string;
  bText: string;
}

function splitCsv(text: string): string[][] {
  return text
    .split(/\r?\n/)
    .filter((line) => line.length > 0)
    .map((line) => line.split(","));
}

function checkHeader(header: string[], expected: readonly string[], path: string): void {
  for (let i = 0; i < expected.length; i++) {
    if (header[i] !== expected[i]) {
      throw new Error(
        `${path}: column ${i} is ${JSON.stringify(header[i])}, expected "${expected[i]}"`,
      );
    }
  }
  if (header.length !== expected.length) {
    throw new Error(`${path}: unexpected extra column "${header[expected.length]}"`);
  }
}

function num(cell: string, column: string, path: string): number {
  const v = Number(cell);
  if (!Number.isFinite(v)) {
    throw new Error(`${path}: column "${column}" has non-numeric cell ${JSON.stringify(cell)}`);
  }
  return v;
}

export function readSummary(path: string): SummaryRow[] {
  const rows = splitCsv(readFileSync(path, "utf-8"));
  checkHeader(rows[0], SUMMARY_COLUMNS, path);
  return rows.slice(1).map((r) => ({
    strength: num(r[0], "strength", path),
    p_eff: num(r[1], "p_eff", path),
    strategy: r[2],
    mode: r[3],
    M: num(r[4], "M", path),
    runs: num(r[5], "runs", path),
    mean_delta_e: num(r[6], "mean_delta_e", path),
    std_delta_e: num(r[7], "std_delta_e", path),
    final_energy: num(r[8], "final_energy", path),
    exact_energy: num(r[9], "exact_energy", path),
  }));
}

export function readFits(path: string): FitRow[] {
  const rows = splitCsv(readFileSync(path, "utf-8"));
  checkHeader(rows[0], FITS_COLUMNS, path);
  return rows.slice(1).map((r) => ({
    kind: r[0],
    strategy: r[1],
    a: num(r[2], "a", path),
    b: num(r[3], "b", path),
    aText: r[2],
    bText: r[3],
  }));
}
