#!/usr/bin/env node
import { existsSync, readFileSync, statSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { loadManifest } from "./manifest.js";
import { historyPlots, parseHistoryCsv } from "./plot.js";
import { buildTable, parseConvergenceCsv, renderMarkdown, renderText } from "./table.js";

function usage(): never {
  console.error("usage: postviz table <convergence.csv | run-dir>");
  console.error("       postviz plot  <run-dir>");
  process.exit(2);
}

export function runTable(target: string): number {
  const csvPath =
    existsSync(target) && statSync(target).isDirectory()
      ? join(target, "convergence.csv")
      : target;
  if (!existsSync(csvPath)) {
    console.error(`missing convergence CSV: ${csvPath}`);
    return 1;
  }
  const table = buildTable(parseConvergenceCsv(readFileSync(csvPath, "utf8")));
  console.log(renderText(table));
  console.log();
  console.log(renderMarkdown(table));
  return table.warnings.length > 0 ? 1 : 0;
}

export function runPlot(runDir: string): number {
  const manifest = loadManifest(runDir);
  const histPath = join(runDir, manifest.files.history);
  if (!existsSync(histPath)) {
    console.error(`manifest names a missing history file: ${histPath}`);
    return 1;
  }
  const rows = parseHistoryCsv(readFileSync(histPath, "utf8"));
  const label = `${manifest.case}/${manifest.scheme}`;
  const plots = historyPlots(rows, label);
  if (plots.length === 0) {
    console.error("history has no plottable series");
    return 1;
  }
  for (const p of plots) {
    const out = join(runDir, `plot_${p.name}.svg`);
    writeFileSync(out, p.svg);
    console.log(`wrote ${out}`);
  }
  return 0;
}

function main(argv: string[]): number {
  if (argv.length !== 2) usage();
  const [cmd, target] = argv;
  if (cmd === "table") return runTable(target);
  if (cmd === "plot") return runPlot(target);
  usage();
}

// invoked directly (not imported by tests)
if (process.argv[1] && /cli\.[jt]s$/.test(process.argv[1])) {
  process.exit(main(process.argv.slice(2)));
}
