import { describe, expect, it } from "vitest";

import { renderChart, validateChartSpec } from "../src/charts.js";
import type { ChartSpec } from "../src/types.js";

function barSpec(overrides: Partial<ChartSpec> = {}): ChartSpec {
  return {
    chart_id: "c123",
    kind: "bar",
    title: "Top 10 In-Demand Skills",
    x_label: "skill",
    y_label: "postings",
    categories: [
      "Requirements Analysis", "Business Analysis", "English", "SQL", "Python",
      "Java", "React", "AWS", "Docker", "Agile",
    ],
    series: [
      { name: "postings", values: [1583, 1571, 1538, 1200, 1100, 1000, 900, 800, 700, 600] },
    ],
    provenance: { tool: "create_top_skills_bar_chart", params: { n: 10 } },
    ...overrides,
  };
}

function mount(markup: string): HTMLElement {
  const holder = document.createElement("div");
  holder.innerHTML = markup;
  return holder;
}

describe("bar chart rendering", () => {
  it("renders one bar per category in spec order", () => {
    const holder = mount(renderChart(barSpec()));
    const bars = holder.querySelectorAll("rect.bar");
    expect(bars.length).toBe(10);
    const order = Array.from(bars).map((bar) => bar.getAttribute("data-category"));
    expect(order).toEqual(barSpec().categories);
  });

  it("displays values exactly equal to the spec values", () => {
    const spec = barSpec();
    const holder = mount(renderChart(spec));
    const shown = Array.from(holder.querySelectorAll("text.bar-value")).map((node) =>
      Number(node.textContent),
    );
    expect(shown).toEqual(spec.series[0].values);
  });

  it("taller value means taller bar", () => {
    const holder = mount(renderChart(barSpec()));
    const heights = Array.from(holder.querySelectorAll("rect.bar")).map((bar) =>
      Number(bar.getAttribute("height")),
    );
    for (let i = 1; i < heights.length; i++) {
      expect(heights[i]).toBeLessThanOrEqual(heights[i - 1]);
    }
  });

  it("shows title and axis labels from the spec", () => {
    const holder = mount(renderChart(barSpec()));
    expect(holder.querySelector(".chart-title")?.textContent).toBe("Top 10 In-Demand Skills");
    expect(holder.querySelector(".axis-x")?.textContent).toBe("skill");
    expect(holder.querySelector(".axis-y")?.textContent).toBe("postings");
  });

  it("escapes markup in labels", () => {
    const spec = barSpec({
      categories: ["<script>alert(1)</script>", "b", "c", "d", "e", "f", "g", "h", "i", "j"],
      title: 'quo"ted & <tagged>',
    });
    const markup = renderChart(spec);
    expect(markup).not.toContain("<script>");
    const holder = mount(markup);
    expect(holder.querySelector("script")).toBeNull();
  });
});

describe("line chart rendering", () => {
  function lineSpec(days: number): ChartSpec {
    const categories = Array.from({ length: days }, (_, i) =>
      `2025-07-${String(i + 1).padStart(2, "0")}`,
    );
    return {
      chart_id: "c456",
      kind: "line",
      title: "Job postings per day",
      x_label: "date",
      y_label: "postings",
      categories,
      series: [{ name: "postings per day", values: categories.map((_, i) => (i * 7) % 5) }],
      provenance: { tool: "create_trend_line_chart", params: {} },
    };
  }

  it("renders one point per category", () => {
    const holder = mount(renderChart(lineSpec(31)));
    expect(holder.querySelectorAll("circle.line-point").length).toBe(31);
    expect(holder.querySelectorAll("polyline.line").length).toBe(1);
  });

  it("renders the 39-point fixture from the trend tool", () => {
    const spec = lineSpec(31);
    // extend to 39 days spanning into August
    for (let d = 1; d <= 8; d++) {
      spec.categories.push(`2025-08-0${d}`);
      spec.series[0].values.push(d);
    }
    const holder = mount(renderChart(spec));
    expect(holder.querySelectorAll("circle.line-point").length).toBe(39);
  });

  it("point data attributes carry exact values", () => {
    const spec = lineSpec(5);
    const holder = mount(renderChart(spec));
    const values = Array.from(holder.querySelectorAll("circle.line-point")).map((node) =>
      Number(node.getAttribute("data-value")),
    );
    expect(values).toEqual(spec.series[0].values);
  });
});

describe("malformed specs", () => {
  it("series/categories length mismatch renders the placeholder", () => {
    const spec = barSpec();
    spec.series = [{ name: "postings", values: [1, 2, 3] }];
    const holder = mount(renderChart(spec));
    expect(holder.querySelector(".chart-placeholder")).not.toBeNull();
    expect(holder.querySelector("svg")).toBeNull();
  });

  it("bar chart with two series renders the placeholder", () => {
    const spec = barSpec();
    spec.series = [spec.series[0], { name: "extra", values: spec.series[0].values }];
    expect(mount(renderChart(spec)).querySelector(".chart-placeholder")).not.toBeNull();
  });

  it("empty categories render the placeholder", () => {
    const spec = barSpec();
    spec.categories = [];
    spec.series = [{ name: "postings", values: [] }];
    expect(mount(renderChart(spec)).querySelector(".chart-placeholder")).not.toBeNull();
  });

  it("unknown kind renders the placeholder, never throws", () => {
    const spec = { ...barSpec(), kind: "pie" as never };
    expect(() => renderChart(spec)).not.toThrow();
    expect(mount(renderChart(spec)).querySelector(".chart-placeholder")).not.toBeNull();
  });

  it("validateChartSpec reports the first violated invariant", () => {
    expect(validateChartSpec(null)).not.toBeNull();
    expect(validateChartSpec(barSpec())).toBeNull();
  });
});
