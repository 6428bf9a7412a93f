// SVG churn charts. Pure builders: input is the /api/churn payload and
// the output embeds those numbers verbatim (data-value attributes and
// tooltip text); only pixel coordinates are computed here. Every series
// gets exactly one vertex per day bucket.

import { ChurnBucket, ChurnSeries } from "./api.js";
import { svgEl } from "./dom.js";

export const CHURN_MEASURES = ["added", "deleted", "changed", "owner_changes"] as const;
export type ChurnMeasure = (typeof CHURN_MEASURES)[number];

const PALETTE: Record<ChurnMeasure, string> = {
  added: "#2e7d32",
  deleted: "#c62828",
  changed: "#1565c0",
  owner_changes: "#ef6c00",
};

const MARGIN = { top: 26, right: 12, bottom: 22, left: 36 };

function maxValue(buckets: ChurnBucket[], measures: readonly ChurnMeasure[]): number {
  let max = 0;
  for (const bucket of buckets) {
    for (const measure of measures) {
      if (bucket[measure] > max) max = bucket[measure];
    }
  }
  return max;
}

export function churnChart(
  series: ChurnSeries,
  measures: readonly ChurnMeasure[] = CHURN_MEASURES,
  width = 640,
  height = 180,
): SVGElement {
  const svg = svgEl("svg", {
    class: "churn-chart",
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    role: "img",
    "data-asset-type": series.asset_type,
    "data-days": String(series.buckets.length),
  });
  svg.appendChild(
    svgEl("text", { x: "8", y: "16", class: "chart-title" }, series.asset_type),
  );

  const buckets = series.buckets;
  if (buckets.length === 0) {
    svg.appendChild(
      svgEl(
        "text",
        { x: String(width / 2), y: String(height / 2), "text-anchor": "middle", class: "chart-empty" },
        "no churn data",
      ),
    );
    return svg;
  }

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const top = maxValue(buckets, measures);
  const x = (i: number) =>
    buckets.length === 1
      ? MARGIN.left + plotW / 2
      : MARGIN.left + (plotW * i) / (buckets.length - 1);
  // top of 0 keeps everything on the baseline instead of dividing by zero
  const y = (v: number) => MARGIN.top + plotH - (top > 0 ? (plotH * v) / top : 0);

  svg.appendChild(
    svgEl("line", {
      x1: String(MARGIN.left),
      y1: String(MARGIN.top + plotH),
      x2: String(MARGIN.left + plotW),
      y2: String(MARGIN.top + plotH),
      stroke: "#999",
      "stroke-width": "1",
    }),
  );
  svg.appendChild(
    svgEl(
      "text",
      { x: String(MARGIN.left - 4), y: String(MARGIN.top + 4), "text-anchor": "end", class: "axis-label" },
      String(top),
    ),
  );
  svg.appendChild(
    svgEl(
      "text",
      { x: String(MARGIN.left), y: String(height - 6), class: "axis-label" },
      buckets[0].date,
    ),
  );
  if (buckets.length > 1) {
    svg.appendChild(
      svgEl(
        "text",
        {
          x: String(MARGIN.left + plotW),
          y: String(height - 6),
          "text-anchor": "end",
          class: "axis-label",
        },
        buckets[buckets.length - 1].date,
      ),
    );
  }

  for (const measure of measures) {
    const color = PALETTE[measure];
    const points = buckets.map((b, i) => `${x(i)},${y(b[measure])}`).join(" ");
    svg.appendChild(
      svgEl("polyline", {
        points,
        fill: "none",
        stroke: color,
        "stroke-width": "1.5",
        class: `line line-${measure}`,
      }),
    );
    for (let i = 0; i < buckets.length; i++) {
      const bucket = buckets[i];
      const circle = svgEl("circle", {
        cx: String(x(i)),
        cy: String(y(bucket[measure])),
        r: "2.5",
        fill: color,
        class: `pt pt-${measure}`,
        "data-day": String(bucket.day),
        "data-value": String(bucket[measure]),
      });
      circle.appendChild(
        svgEl("title", {}, `${bucket.date} ${measure}=${bucket[measure]}`),
      );
      svg.appendChild(circle);
    }
  }

  let legendX = MARGIN.left;
  for (const measure of measures) {
    svg.appendChild(
      svgEl("rect", {
        x: String(legendX),
        y: "8",
        width: "10",
        height: "10",
        fill: PALETTE[measure],
      }),
    );
    svg.appendChild(
      svgEl("text", { x: String(legendX + 14), y: "17", class: "legend-label" }, measure),
    );
    legendX += 14 + 9 * measure.length + 18;
  }
  return svg;
}
