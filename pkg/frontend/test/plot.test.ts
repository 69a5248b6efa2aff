import { describe, expect, it } from "vitest";

import {
  historyPlots,
  parseHistoryCsv,
  renderLinePlot,
  SYMLOG_FLOOR,
} from "../src/plot.js";

const HIST =
  "t,dt,ke,entropy,entropy_rate,mass,energy,min_rho,min_T,max_Sn,limited\n" +
  "0.1,0.01,1.0,-3.5,0.0,2.0,5.0,0.9,0.8,0.0,0\n" +
  "0.2,0.01,0.98,-3.6,-1e-12,2.0,5.0,0.9,0.8,0.3,2\n" +
  "0.3,0.01,0.95,-3.7,-2e-12,2.0,5.0,0.9,0.8,0.1,1\n";

describe("history plots", () => {
  it("parses history CSV into numeric rows", () => {
    const rows = parseHistoryCsv(HIST);
    expect(rows).toHaveLength(3);
    expect(rows[1].ke).toBeCloseTo(0.98);
    expect(rows[2].limited).toBe(1);
  });

  it("renders a constant series as a flat line with axis labels", () => {
    const svg = renderLinePlot(
      [{ label: "run", x: [0, 1, 2], y: [0.5, 0.5, 0.5] }],
      { title: "flat", xLabel: "t", yLabel: "value" },
    );
    expect(svg).toContain("<svg");
    expect(svg).toContain(">t</text>");
    expect(svg).toContain("value");
    const d = /<path d="([^"]+)"/.exec(svg)![1];
    const ys = [...d.matchAll(/,(-?[\d.]+)/g)].map((m) => Number(m[1]));
    expect(Math.max(...ys) - Math.min(...ys)).toBeLessThan(1e-9);
  });

  it("overlays two series with both legends", () => {
    const svg = renderLinePlot(
      [
        { label: "scheme-a", x: [0, 1], y: [1, 2] },
        { label: "scheme-b", x: [0, 1], y: [2, 1] },
      ],
      { title: "overlay", xLabel: "t", yLabel: "ke" },
    );
    expect(svg).toContain("scheme-a");
    expect(svg).toContain("scheme-b");
    expect((svg.match(/<path /g) ?? []).length).toBe(2);
  });

  it("handles zeros on a symlog axis via the linear floor segment", () => {
    const svg = renderLinePlot(
      [{ label: "r", x: [0, 1, 2], y: [0, 1e-12, 1e-8] }],
      { title: "rate", xLabel: "t", yLabel: "dS/dt", yMode: "symlog" },
    );
    expect(svg).toContain("<path");
    expect(svg).not.toContain("NaN");
    expect(SYMLOG_FLOOR).toBe(1e-20);
  });

  it("produces the standard plot set from history rows", () => {
    const plots = historyPlots(parseHistoryCsv(HIST), "tgv/ppesad");
    const names = plots.map((p) => p.name);
    expect(names).toContain("kinetic_energy");
    expect(names).toContain("entropy");
    expect(names).toContain("limited_elements");
    for (const p of plots) {
      expect(p.svg).toContain("tgv/ppesad");
      expect(p.svg).not.toContain("NaN");
    }
  });

  it("throws on an entirely empty series", () => {
    expect(() =>
      renderLinePlot([{ label: "none", x: [], y: [] }], {
        title: "empty",
        xLabel: "t",
        yLabel: "v",
      }),
    ).toThrow(/no data/);
  });
});
