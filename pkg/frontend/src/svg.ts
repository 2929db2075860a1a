/** Minimal deterministic SVG chart builder: no runtime dependencies, fixed
 * float formatting, stable element order. */

export interface Series {
  label: string;
  color: string;
  points: Array<[number, number]>;
  line?: boolean;
  dashed?: boolean;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  hLines?: Array<{ y: number; label: string; color: string }>;
  annotations?: string[];
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf"];

const W = 760;
const H = 520;
const MARGIN = { left: 86, right: 24, top: 46, bottom: 64 };

const fmt = (v: number): string => v.toPrecision(8);

function bounds(spec: ChartSpec): [number, number, number, number] {
  let xMin = Infinity, xMax = -Infinity, yMin = Infinity, yMax = -Infinity;
  for (const s of spec.series) {
    for (const [x, y] of s.points) {
      xMin = Math.min(xMin, x); xMax = Math.max(xMax, x);
      yMin = Math.min(yMin, y); yMax = Math.max(yMax, y);
    }
  }
  for (const h of spec.hLines ?? []) {
    yMin = Math.min(yMin, h.y); yMax = Math.max(yMax, h.y);
  }
  if (!Number.isFinite(xMin)) { xMin = 0; xMax = 1; yMin = 0; yMax = 1; }
  if (xMax === xMin) { xMax = xMin + 1; }
  if (yMax === yMin) { yMax = yMin + 1; }
  const padX = 0.06 * (xMax - xMin);
  const padY = 0.08 * (yMax - yMin);
  return [xMin - padX, xMax + padX, yMin - padY, yMax + padY];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(spec: ChartSpec): string {
  const [xMin, xMax, yMin, yMax] = bounds(spec);
  const px = (x: number): string =>
    fmt(MARGIN.left + ((x - xMin) / (xMax - xMin)) * (W - MARGIN.left - MARGIN.right));
  const py = (y: number): string =>
    fmt(H - MARGIN.bottom - ((y - yMin) / (yMax - yMin)) * (H - MARGIN.top - MARGIN.bottom));

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`);
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${W / 2}" y="24" text-anchor="middle" font-size="17" font-family="sans-serif">${esc(spec.title)}</text>`);

  // axes with 5 ticks each
  const axisColor = "#333";
  parts.push(`<line x1="${MARGIN.left}" y1="${H - MARGIN.bottom}" x2="${W - MARGIN.right}" y2="${H - MARGIN.bottom}" stroke="${axisColor}"/>`);
  parts.push(`<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${H - MARGIN.bottom}" stroke="${axisColor}"/>`);
  for (let i = 0; i <= 4; i++) {
    const xv = xMin + ((xMax - xMin) * i) / 4;
    const yv = yMin + ((yMax - yMin) * i) / 4;
    parts.push(`<line x1="${px(xv)}" y1="${H - MARGIN.bottom}" x2="${px(xv)}" y2="${H - MARGIN.bottom + 5}" stroke="${axisColor}"/>`);
    parts.push(`<text x="${px(xv)}" y="${H - MARGIN.bottom + 20}" text-anchor="middle" font-size="12" font-family="sans-serif">${xv.toPrecision(3)}</text>`);
    parts.push(`<line x1="${MARGIN.left - 5}" y1="${py(yv)}" x2="${MARGIN.left}" y2="${py(yv)}" stroke="${axisColor}"/>`);
    parts.push(`<text x="${MARGIN.left - 9}" y="${py(yv)}" text-anchor="end" dominant-baseline="middle" font-size="12" font-family="sans-serif">${yv.toPrecision(3)}</text>`);
  }
  parts.push(`<text x="${(W + MARGIN.left - MARGIN.right) / 2}" y="${H - 18}" text-anchor="middle" font-size="14" font-family="sans-serif">${esc(spec.xLabel)}</text>`);
  parts.push(`<text x="22" y="${(H + MARGIN.top - MARGIN.bottom) / 2}" text-anchor="middle" font-size="14" font-family="sans-serif" transform="rotate(-90 22 ${(H + MARGIN.top - MARGIN.bottom) / 2})">${esc(spec.yLabel)}</text>`);

  for (const h of spec.hLines ?? []) {
    parts.push(`<line x1="${MARGIN.left}" y1="${py(h.y)}" x2="${W - MARGIN.right}" y2="${py(h.y)}" stroke="${h.color}" stroke-width="1.5"/>`);
    parts.push(`<text x="${W - MARGIN.right - 4}" y="${fmt(Number(py(h.y)) - 5)}" text-anchor="end" font-size="12" fill="${h.color}" font-family="sans-serif">${esc(h.label)}</text>`);
  }

  for (const s of spec.series) {
    if (s.line && s.points.length > 1) {
      const d = s.points
        .map(([x, y], i) => `${i === 0 ? "M" : "L"}${px(x)},${py(y)}`)
        .join(" ");
      const dash = s.dashed ? ` stroke-dasharray="6 4"` : "";
      parts.push(`<path d="${d}" fill="none" stroke="${s.color}" stroke-width="1.8"${dash}/>`);
    }
    if (!s.dashed) {
      for (const [x, y] of s.points) {
        parts.push(`<circle cx="${px(x)}" cy="${py(y)}" r="4" fill="${s.color}"/>`);
      }
    }
  }

  // legend
  let ly = MARGIN.top + 8;
  for (const s of spec.series) {
    parts.push(`<rect x="${W - MARGIN.right - 180}" y="${ly - 9}" width="11" height="11" fill="${s.color}"/>`);
    parts.push(`<text x="${W - MARGIN.right - 164}" y="${ly}" font-size="12" font-family="sans-serif">${esc(s.label)}</text>`);
    ly += 18;
  }

  // annotation block (verbatim fit numbers)
  let ay = H - MARGIN.bottom - 12 - 16 * (spec.annotations?.length ?? 0);
  for (const a of spec.annotations ?? []) {
    parts.push(`<text x="${MARGIN.left + 10}" y="${ay}" font-size="13" font-family="monospace" class="annotation">${esc(a)}</text>`);
    ay += 16;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
