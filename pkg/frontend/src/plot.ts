import Papa from "papaparse";
import { scaleLinear, scaleSymlog } from "d3-scale";
import { line } from "d3-shape";

/** One sampled history record from the solver's history.csv. */
export interface HistoryRow {
  t: number;
  dt: number;
  ke: number;
  entropy: number;
  entropy_rate: number;
  mass: number;
  energy: number;
  min_rho: number;
  min_T: number;
  max_Sn: number;
  limited: number;
}

export function parseHistoryCsv(text: string): HistoryRow[] {
  const res = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
    dynamicTyping: true,
  });
  if (res.errors.length > 0) {
    throw new Error(`CSV parse error: ${res.errors[0].message}`);
  }
  return res.data as unknown as HistoryRow[];
}

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

const W = 640;
const H = 400;
const M = { left: 70, right: 20, top: 30, bottom: 45 };
const COLORS = ["#1f6fb2", "#d1495b", "#3a7d44", "#8d6a9f"];

/** Values at or below this magnitude sit on the symlog linear segment. */
export const SYMLOG_FLOOR = 1e-20;

function ticksOf(scale: { ticks(n?: number): number[] }): number[] {
  return scale.ticks(6);
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(0);
  return String(Math.round(v * 1e6) / 1e6);
}

/**
 * Render one or more series as a standalone SVG string (no DOM needed).
 * yMode "symlog" keeps zeros plottable via a linear segment below
 * SYMLOG_FLOOR.
 */
export function renderLinePlot(
  series: Series[],
  opts: { title: string; xLabel: string; yLabel: string; yMode?: "linear" | "symlog" },
): string {
  const pts = series.flatMap((s) => s.x.map((x, i) => [x, s.y[i]]));
  if (pts.length === 0) {
    throw new Error(`no data for plot "${opts.title}"`);
  }
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const xScale = scaleLinear()
    .domain([Math.min(...xs), Math.max(...xs)])
    .range([M.left, W - M.right])
    .nice();
  const yScale =
    opts.yMode === "symlog"
      ? scaleSymlog()
          .constant(SYMLOG_FLOOR)
          .domain([Math.min(...ys, 0), Math.max(...ys)])
          .range([H - M.bottom, M.top])
      : scaleLinear()
          .domain([Math.min(...ys), Math.max(...ys)])
          .range([H - M.bottom, M.top])
          .nice();

  const gen = line<[number, number]>()
    .x((d) => xScale(d[0]))
    .y((d) => yScale(d[1]));

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
      `viewBox="0 0 ${W} ${H}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="18" text-anchor="middle" font-size="14">` +
      `${opts.title}</text>`,
  );
  // axes
  parts.push(
    `<line x1="${M.left}" y1="${H - M.bottom}" x2="${W - M.right}" ` +
      `y2="${H - M.bottom}" stroke="black"/>`,
    `<line x1="${M.left}" y1="${M.top}" x2="${M.left}" ` +
      `y2="${H - M.bottom}" stroke="black"/>`,
  );
  for (const t of ticksOf(xScale)) {
    const x = xScale(t);
    parts.push(
      `<line x1="${x}" y1="${H - M.bottom}" x2="${x}" ` +
        `y2="${H - M.bottom + 5}" stroke="black"/>`,
      `<text x="${x}" y="${H - M.bottom + 18}" text-anchor="middle">` +
        `${fmtTick(t)}</text>`,
    );
  }
  for (const t of ticksOf(yScale as { ticks(n?: number): number[] })) {
    const y = yScale(t);
    parts.push(
      `<line x1="${M.left - 5}" y1="${y}" x2="${M.left}" y2="${y}" ` +
        `stroke="black"/>`,
      `<text x="${M.left - 8}" y="${y + 4}" text-anchor="end">` +
        `${fmtTick(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(M.left + W - M.right) / 2}" y="${H - 8}" ` +
      `text-anchor="middle">${opts.xLabel}</text>`,
    `<text x="16" y="${(M.top + H - M.bottom) / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${(M.top + H - M.bottom) / 2})">` +
      `${opts.yLabel}</text>`,
  );
  series.forEach((s, i) => {
    const d = gen(s.x.map((x, j) => [x, s.y[j]] as [number, number]));
    if (d === null) return;
    const color = COLORS[i % COLORS.length];
    parts.push(
      `<path d="${d}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
    parts.push(
      `<text x="${W - M.right - 6}" y="${M.top + 14 * (i + 1)}" ` +
        `text-anchor="end" fill="${color}">${s.label}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}

/** The standard per-run plots: KE, entropy, limited-element counts. */
export function historyPlots(
  rows: HistoryRow[],
  label: string,
): { name: string; svg: string }[] {
  const t = rows.map((r) => r.t);
  const out: { name: string; svg: string }[] = [];
  const defs: [string, keyof HistoryRow, string, "linear" | "symlog"][] = [
    ["kinetic_energy", "ke", "total kinetic energy", "linear"],
    ["entropy", "entropy", "total entropy", "linear"],
    ["entropy_rate", "entropy_rate", "dS/dt", "symlog"],
    ["limited_elements", "limited", "limited elements", "linear"],
  ];
  for (const [name, key, yLabel, yMode] of defs) {
    const y = rows.map((r) => Number(r[key]));
    if (y.length === 0 || y.every((v) => !Number.isFinite(v))) {
      continue; // empty series are skipped, not guessed at
    }
    out.push({
      name,
      svg: renderLinePlot([{ label, x: t, y }], {
        title: `${yLabel} over time`,
        xLabel: "t",
        yLabel,
        yMode,
      }),
    });
  }
  return out;
}
