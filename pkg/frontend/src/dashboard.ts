// Ownership health dashboard: headline tiles straight off the health
// report plus per-type churn charts built from /api/churn. No number
// shown here is computed client-side; data-value attributes carry the
// raw API fields for auditability.

import { ApiClient, ApiError, ChurnSeries, HealthReport } from "./api.js";
import { churnChart } from "./charts.js";
import { el, clear } from "./dom.js";
import { fmtCount, fmtEpoch, fmtRate } from "./format.js";

const SECONDS_PER_DAY = 86400;
const DEFAULT_WINDOW_DAYS = 90;

function tile(label: string, rawValue: number, text: string, extra?: string): HTMLElement {
  return el(
    "div",
    { class: "tile", "data-metric": label },
    el("div", { class: "tile-value", "data-value": String(rawValue) }, text),
    el("div", { class: "tile-label" }, label + (extra ? ` ${extra}` : "")),
  );
}

function perTypeTable(report: HealthReport): HTMLElement {
  const head = el(
    "tr",
    {},
    ...["type", "assets", "unowned", "stale", "recommended", "inconclusive", "rate"].map((h) =>
      el("th", {}, h),
    ),
  );
  const body = el("tbody", {});
  for (const [name, bucket] of Object.entries(report.per_type)) {
    body.appendChild(
      el(
        "tr",
        { "data-asset-type": name },
        el("td", {}, name),
        el("td", { "data-value": String(bucket.asset_count) }, fmtCount(bucket.asset_count)),
        el("td", { "data-value": String(bucket.unowned_count) }, fmtCount(bucket.unowned_count)),
        el("td", { "data-value": String(bucket.stale_owner_count) }, fmtCount(bucket.stale_owner_count)),
        el("td", { "data-value": String(bucket.recommended_count) }, fmtCount(bucket.recommended_count)),
        el("td", { "data-value": String(bucket.inconclusive_count) }, fmtCount(bucket.inconclusive_count)),
        el("td", { "data-value": String(bucket.inconclusive_rate) }, fmtRate(bucket.inconclusive_rate)),
      ),
    );
  }
  const table = el("table", { class: "per-type" });
  table.appendChild(el("thead", {}, head));
  table.appendChild(body);
  return table;
}

export class DashboardView {
  constructor(
    private client: ApiClient,
    private opts: { windowDays?: number; onConnectionError?: (err: ApiError) => void } = {},
  ) {}

  async mount(root: HTMLElement): Promise<void> {
    clear(root);
    root.appendChild(el("p", { class: "loading" }, "loading…"));
    let report: HealthReport;
    try {
      report = await this.client.healthReport();
    } catch (err) {
      clear(root);
      root.appendChild(
        el(
          "div",
          { class: "load-error" },
          el("p", {}, "Could not load the health report."),
          el("button", { onclick: () => void this.mount(root) }, "retry"),
        ),
      );
      if (err instanceof ApiError && this.opts.onConnectionError) {
        this.opts.onConnectionError(err);
      }
      return;
    }
    clear(root);
    root.appendChild(this.renderTiles(report));
    root.appendChild(el("h3", {}, "by asset type"));
    root.appendChild(perTypeTable(report));
    root.appendChild(el("h3", {}, "daily churn"));
    const chartsEl = el("div", { class: "charts" });
    root.appendChild(chartsEl);
    await this.renderCharts(chartsEl, report);
  }

  private renderTiles(report: HealthReport): HTMLElement {
    return el(
      "div",
      { class: "tiles" },
      tile("assets", report.asset_count, fmtCount(report.asset_count)),
      tile("unowned", report.unowned_count, fmtCount(report.unowned_count)),
      tile(
        "stale owners",
        report.stale_owner_count,
        fmtCount(report.stale_owner_count),
        `(${report.stale_days}d horizon)`,
      ),
      tile("recommended", report.recommended_count, fmtCount(report.recommended_count)),
      tile("inconclusive", report.inconclusive_count, fmtCount(report.inconclusive_count)),
      tile("inconclusive rate", report.inconclusive_rate, fmtRate(report.inconclusive_rate)),
      el("p", { class: "muted as-of" }, `as of ${fmtEpoch(report.as_of)}`),
    );
  }

  private async renderCharts(container: HTMLElement, report: HealthReport): Promise<void> {
    const windowDays = this.opts.windowDays ?? DEFAULT_WINDOW_DAYS;
    const toDay = Math.floor(report.as_of / SECONDS_PER_DAY);
    const fromDay = toDay - (windowDays - 1);
    const types = Object.keys(report.per_type);
    let series: ChurnSeries[];
    try {
      series = await Promise.all(types.map((t) => this.client.churn(t, fromDay, toDay)));
    } catch (err) {
      container.appendChild(el("p", { class: "inline-error" }, "could not load churn series"));
      if (err instanceof ApiError && this.opts.onConnectionError) {
        this.opts.onConnectionError(err);
      }
      return;
    }
    for (const s of series) {
      container.appendChild(el("div", { class: "chart-box" }, churnChart(s) as unknown as HTMLElement));
    }
  }
}

export { tile as _tileForTest, perTypeTable as _perTypeTableForTest };
