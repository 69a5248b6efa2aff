import { existsSync, readFileSync, readdirSync, rmSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { runPlot } from "../src/cli.js";
import { loadManifest } from "../src/manifest.js";
import { historyPlots, parseHistoryCsv } from "../src/plot.js";

// A small Taylor-Green run produced by the solver CLI; regenerate with
//   esflow run <config with out_dir=test/fixtures/tgv_run>
const runDir = join(
  dirname(fileURLToPath(import.meta.url)),
  "fixtures",
  "tgv_run",
);

describe("solver run directory", () => {
  it("has a manifest that validates against the schema", () => {
    const m = loadManifest(runDir);
    expect(m.case).toBe("tgv");
    expect(m.scheme).toBe("ppesad");
    expect(m.t_end).toBeGreaterThan(0);
  });

  it("rejects a directory without a manifest", () => {
    expect(() => loadManifest(join(runDir, "nope"))).toThrow(
      /missing manifest/,
    );
  });

  it("plots the recorded history without NaN artifacts", () => {
    const m = loadManifest(runDir);
    const rows = parseHistoryCsv(
      readFileSync(join(runDir, m.files.history), "utf8"),
    );
    expect(rows.length).toBeGreaterThan(3);
    // density stayed positive for the whole run
    for (const r of rows) expect(r.min_rho).toBeGreaterThan(0);
    const plots = historyPlots(rows, `${m.case}/${m.scheme}`);
    expect(plots.map((p) => p.name)).toContain("kinetic_energy");
    for (const p of plots) {
      expect(p.svg).toContain("<svg");
      expect(p.svg).not.toContain("NaN");
    }
  });

  it("writes SVG files through the plot command", () => {
    for (const f of readdirSync(runDir)) {
      if (f.startsWith("plot_") && f.endsWith(".svg")) {
        rmSync(join(runDir, f));
      }
    }
    expect(runPlot(runDir)).toBe(0);
    const svgs = readdirSync(runDir).filter(
      (f) => f.startsWith("plot_") && f.endsWith(".svg"),
    );
    expect(svgs.length).toBeGreaterThan(0);
    expect(existsSync(join(runDir, "plot_kinetic_energy.svg"))).toBe(true);
  });
});
