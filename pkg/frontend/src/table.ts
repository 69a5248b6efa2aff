import Papa from "papaparse";

/** One grid row of a convergence study. */
export interface ConvRow {
  p: number;
  K: number;
  Linf: number;
  rateLinf: number | null;
  L2: number;
  rateL2: number | null;
}

export interface RateCheck {
  K: number;
  column: "Linf" | "L2";
  stated: number;
  recomputed: number;
}

export interface ConvTable {
  rows: ConvRow[];
  /** rates recomputed from the errors; same order as rows */
  recomputed: { rateLinf: number | null; rateL2: number | null }[];
  /** stated-vs-recomputed mismatches beyond tolerance */
  warnings: RateCheck[];
}

const RATE_TOL = 1e-10;

function num(v: unknown): number | null {
  if (v === null || v === undefined || v === "") return null;
  const x = Number(v);
  return Number.isFinite(x) ? x : null;
}

/** Parse a convergence CSV (columns p, K, Linf, rate_Linf, L2, rate_L2). */
export function parseConvergenceCsv(text: string): ConvRow[] {
  const res = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (res.errors.length > 0) {
    throw new Error(`CSV parse error: ${res.errors[0].message}`);
  }
  const rows: ConvRow[] = [];
  for (const r of res.data) {
    const p = num(r.p);
    const K = num(r.K);
    const Linf = num(r.Linf);
    const L2 = num(r.L2);
    if (p === null || K === null || Linf === null || L2 === null) {
      throw new Error(`incomplete convergence row: ${JSON.stringify(r)}`);
    }
    rows.push({
      p,
      K,
      Linf,
      L2,
      rateLinf: num(r.rate_Linf),
      rateL2: num(r.rate_L2),
    });
  }
  return rows;
}

/**
 * Recompute the log2 convergence rates between successive grids from the
 * error columns alone, and flag any stated rate that disagrees.  Numbers
 * in the CSV are never trusted for derived quantities.
 */
export function buildTable(rows: ConvRow[]): ConvTable {
  const recomputed: ConvTable["recomputed"] = [];
  const warnings: RateCheck[] = [];
  for (let i = 0; i < rows.length; i++) {
    if (i === 0 || rows[i].p !== rows[i - 1].p) {
      recomputed.push({ rateLinf: null, rateL2: null });
      continue;
    }
    const den = Math.log2(rows[i].K / rows[i - 1].K);
    const rateLinf = Math.log2(rows[i - 1].Linf / rows[i].Linf) / den;
    const rateL2 = Math.log2(rows[i - 1].L2 / rows[i].L2) / den;
    recomputed.push({ rateLinf, rateL2 });
    const checks: [("Linf" | "L2"), number | null, number][] = [
      ["Linf", rows[i].rateLinf, rateLinf],
      ["L2", rows[i].rateL2, rateL2],
    ];
    for (const [column, stated, rec] of checks) {
      if (stated !== null && Math.abs(stated - rec) > RATE_TOL) {
        warnings.push({ K: rows[i].K, column, stated, recomputed: rec });
      }
    }
  }
  return { rows, recomputed, warnings };
}

function sci(x: number): string {
  return x.toExponential(2);
}

function rate(x: number | null): string {
  return x === null ? "-" : x.toFixed(2);
}

/** Fixed-width text rendering. */
export function renderText(table: ConvTable): string {
  const header = ["p", "K", "Linf error", "rate", "L2 error", "rate"];
  const lines: string[][] = [header];
  table.rows.forEach((r, i) => {
    const rc = table.recomputed[i];
    lines.push([
      String(r.p),
      String(r.K),
      sci(r.Linf),
      rate(rc.rateLinf),
      sci(r.L2),
      rate(rc.rateL2),
    ]);
  });
  const widths = header.map((_, c) =>
    Math.max(...lines.map((l) => l[c].length)),
  );
  const out = lines.map((l) =>
    l.map((cell, c) => cell.padStart(widths[c])).join("  "),
  );
  for (const w of table.warnings) {
    out.push(
      `! rate mismatch at K=${w.K} (${w.column}): file says ` +
        `${w.stated}, errors give ${w.recomputed.toFixed(6)}`,
    );
  }
  return out.join("\n");
}

/** GitHub-flavored markdown rendering. */
export function renderMarkdown(table: ConvTable): string {
  const out = [
    "| p | K | Linf error | rate | L2 error | rate |",
    "|---|---|---|---|---|---|",
  ];
  table.rows.forEach((r, i) => {
    const rc = table.recomputed[i];
    out.push(
      `| ${r.p} | ${r.K} | ${sci(r.Linf)} | ${rate(rc.rateLinf)} | ` +
        `${sci(r.L2)} | ${rate(rc.rateL2)} |`,
    );
  });
  for (const w of table.warnings) {
    out.push(
      `> rate mismatch at K=${w.K} (${w.column}): stated ${w.stated} vs ` +
        `recomputed ${w.recomputed.toFixed(6)}`,
    );
  }
  return out.join("\n");
}
