/**
 * The three figure kinds rendered from a result bundle.
 *
 * Fit parameters shown on a figure are quoted verbatim from fits.csv (the
 * producer writes shortest round-trip floats there, and its fit subcommand
 * prints the same strings), so annotations agree with the fit tool exactly.
 */

import { readFileSync } from "node:fs";
import { FitRow, SummaryRow, readFits, readSummary } from "./csv.js";
import { ChartSpec, PALETTE, Series, renderChart } from "./svg.js";

export interface FigureRecipe {
  kind: "shot_scaling" | "power_law" | "strategy_matrix";
  summary: string;
  fits?: string;
  output: string;
  title?: string;
}

export function loadRecipe(path: string): FigureRecipe {
  const raw = JSON.parse(readFileSync(path, "utf-8")) as Partial<FigureRecipe>;
  if (!raw.kind || !["shot_scaling", "power_law", "strategy_matrix"].includes(raw.kind)) {
    throw new Error(`recipe ${path}: unknown kind ${JSON.stringify(raw.kind)}`);
  }
  if (!raw.summary || !raw.output) {
    throw new Error(`recipe ${path}: "summary" and "output" are required`);
  }
  return raw as FigureRecipe;
}

function groupBy<T>(items: T[], key: (item: T) => string): Map<string, T[]> {
  const out = new Map<string, T[]>();
  for (const item of items) {
    const k = key(item);
    const bucket = out.get(k);
    if (bucket) {
      bucket.push(item);
    } else {
      out.set(k, [item]);
    }
  }
  return out;
}

function fitsFor(recipe: FigureRecipe): FitRow[] {
  return recipe.fits ? readFits(recipe.fits) : [];
}

export function buildChart(recipe: FigureRecipe): ChartSpec {
  const rows = readSummary(recipe.summary);
  if (recipe.kind === "shot_scaling") {
    return shotScaling(rows, fitsFor(recipe), recipe.title ?? "Biased retraining gain vs shots");
  }
  if (recipe.kind === "power_law") {
    return powerLaw(rows, fitsFor(recipe), recipe.title ?? "Retraining gain vs noise strength");
  }
  return strategyMatrix(rows, recipe.title ?? "Final energy per retraining strategy");
}

function shotScaling(rows: SummaryRow[], fits: FitRow[], title: string): ChartSpec {
  const biased = rows.filter((r) => r.mode === "biased");
  const series: Series[] = [];
  const annotations: string[] = [];
  let color = 0;
  for (const [label, group] of groupBy(biased, (r) => `${r.strategy} @ p=${r.strength}`)) {
    const pts = group
      .map((r): [number, number] => [1 / r.M, r.mean_delta_e])
      .sort((p, q) => p[0] - q[0]);
    const c = PALETTE[color++ % PALETTE.length];
    series.push({ label, color: c, points: pts });
    const fit = fits.find((f) => {
      if (f.kind !== "shots") return false;
      const at = f.strategy.lastIndexOf("@");
      return at > 0
        && f.strategy.slice(0, at) === group[0].strategy
        && Number(f.strategy.slice(at + 1)) === group[0].strength;
    });
    if (fit) {
      const line = pts.map(([x]): [number, number] => [x, fit.b + fit.a * x]);
      series.push({ label: `${label} fit`, color: c, points: line, line: true, dashed: true });
      annotations.push(`B[${label}] = ${fit.bText}`);
    }
  }
  return { title, xLabel: "1 / M", yLabel: "mean gain", series, annotations };
}

function powerLaw(rows: SummaryRow[], fits: FitRow[], title: string): ChartSpec {
  const usable = rows.filter((r) => r.p_eff > 0 && r.mean_delta_e < 0);
  const series: Series[] = [];
  const annotations: string[] = [];
  let color = 0;
  for (const [strategy, group] of groupBy(usable, (r) => r.strategy)) {
    const pts = group
      .map((r): [number, number] => [Math.log(r.p_eff), Math.log(-r.mean_delta_e)])
      .sort((p, q) => p[0] - q[0]);
    const c = PALETTE[color++ % PALETTE.length];
    series.push({ label: strategy, color: c, points: pts });
    const fit = fits.find((f) => f.kind === "power" && f.strategy === strategy);
    if (fit) {
      const line = pts.map(([x]): [number, number] => [x, Math.log(-fit.a) + fit.b * x]);
      series.push({ label: `${strategy} fit`, color: c, points: line, line: true, dashed: true });
      annotations.push(`exponent[${strategy}] = ${fit.bText}`);
    }
  }
  return { title, xLabel: "ln p_eff", yLabel: "ln(-gain)", series, annotations };
}

function strategyMatrix(rows: SummaryRow[], title: string): ChartSpec {
  const series: Series[] = [];
  let color = 0;
  for (const [strategy, group] of groupBy(rows, (r) => r.strategy)) {
    const pts = group
      .map((r): [number, number] => [r.p_eff, r.final_energy])
      .sort((p, q) => p[0] - q[0]);
    series.push({
      label: strategy,
      color: PALETTE[color++ % PALETTE.length],
      points: pts,
      line: true,
    });
  }
  const hLines = rows.length
    ? [{ y: rows[0].exact_energy, label: "exact ground energy", color: "#d62728" }]
    : [];
  return { title, xLabel: "p_eff", yLabel: "energy", series, hLines };
}

export function renderRecipe(recipe: FigureRecipe): string {
  return renderChart(buildChart(recipe));
}
