import { readFileSync } from "node:fs";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  buildTable,
  parseConvergenceCsv,
  renderMarkdown,
  renderText,
} from "../src/table.js";

const here = dirname(fileURLToPath(import.meta.url));

describe("convergence table", () => {
  it("computes rate 4.00 for an error drop of 16x at K ratio 2", () => {
    const rows = parseConvergenceCsv(
      "p,K,Linf,rate_Linf,L2,rate_L2\n4,8,1e-2,,1e-2,\n4,16,6.25e-4,,6.25e-4,\n",
    );
    const t = buildTable(rows);
    expect(t.recomputed[1].rateL2).toBeCloseTo(4.0, 12);
    expect(t.recomputed[1].rateLinf).toBeCloseTo(4.0, 12);
    expect(t.warnings).toHaveLength(0);
  });

  it("reproduces the reference p=4 block rates to within 0.01", () => {
    const csv = readFileSync(
      join(here, "fixtures", "reference_p4_convergence.csv"),
      "utf8",
    );
    const t = buildTable(parseConvergenceCsv(csv));
    // K=24 row
    expect(Math.abs(t.recomputed[1].rateLinf! - 3.96)).toBeLessThan(0.01);
    expect(Math.abs(t.recomputed[1].rateL2! - 4.1)).toBeLessThan(0.01);
    // K=48 row
    expect(Math.abs(t.recomputed[2].rateLinf! - 4.49)).toBeLessThan(0.01);
    expect(Math.abs(t.recomputed[2].rateL2! - 5.01)).toBeLessThan(0.01);
    const text = renderText(t);
    expect(text).toContain("3.09e-4");
    expect(text).toContain("5.01");
  });

  it("leaves the rate column empty for a single row", () => {
    const t = buildTable(
      parseConvergenceCsv("p,K,Linf,rate_Linf,L2,rate_L2\n4,8,1e-2,,2e-2,\n"),
    );
    expect(t.recomputed[0].rateL2).toBeNull();
    expect(renderText(t)).toContain("-");
    expect(renderMarkdown(t)).toContain("| - |");
  });

  it("warns when a stated rate disagrees with the errors", () => {
    const t = buildTable(
      parseConvergenceCsv(
        "p,K,Linf,rate_Linf,L2,rate_L2\n4,8,1e-2,,1e-2,\n4,16,6.25e-4,4,6.25e-4,3.5\n",
      ),
    );
    expect(t.warnings).toHaveLength(1);
    expect(t.warnings[0].column).toBe("L2");
    expect(renderText(t)).toContain("rate mismatch");
  });

  it("accepts full-precision stated rates without warning", () => {
    const rate = Math.log2(1e-2 / 6.25e-4);
    const t = buildTable(
      parseConvergenceCsv(
        `p,K,Linf,rate_Linf,L2,rate_L2\n4,8,1e-2,,1e-2,\n4,16,6.25e-4,${rate},6.25e-4,${rate}\n`,
      ),
    );
    expect(t.warnings).toHaveLength(0);
  });

  it("does not compute a rate across different p blocks", () => {
    const t = buildTable(
      parseConvergenceCsv(
        "p,K,Linf,rate_Linf,L2,rate_L2\n3,8,1e-2,,1e-2,\n4,8,1e-3,,1e-3,\n",
      ),
    );
    expect(t.recomputed[1].rateL2).toBeNull();
  });

  it("rejects malformed rows", () => {
    expect(() =>
      parseConvergenceCsv("p,K,Linf,rate_Linf,L2,rate_L2\n4,8,,,1e-2,\n"),
    ).toThrow(/incomplete/);
  });
});
