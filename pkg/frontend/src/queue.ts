// Review queue: paginated pending recommendations with band badges,
// expandable explanations, and Accept / Reject / Delegate controls.
// Decisions update optimistically; the server stays authoritative, so a
// conflict re-fetches the item and shows who decided first. The same
// view renders the decided history (read-only cards).

import {
  ApiClient,
  ApiError,
  AttributionBreakdown,
  Candidate,
  DecisionName,
  Recommendation,
  RecommendationEntry,
} from "./api.js";
import { el, clear } from "./dom.js";
import { bandClass, decisionNote, fmtEpoch, fmtScore } from "./format.js";

const TOP_CANDIDATES = 3;
const PAGE_SIZE = 50;

export interface QueueOptions {
  status: "pending" | "decided";
  canDecide: boolean;
  pageSize?: number;
  onConnectionError?: (err: ApiError) => void;
}

export function renderAttributionBars(attribution: AttributionBreakdown): HTMLElement {
  const rows = el("div", { class: "bars" });
  const largest = Math.max(
    1e-12,
    ...attribution.contributions.map(([, value]) => Math.abs(value)),
  );
  for (const [name, value] of attribution.contributions) {
    const width = Math.min(100, (Math.abs(value) / largest) * 100);
    const side = value < 0 ? "neg" : "pos";
    rows.appendChild(
      el(
        "div",
        { class: "bar-row" },
        el("span", { class: "bar-name" }, name),
        el(
          "div",
          { class: "bar-track" },
          el("div", {
            class: `bar ${side}`,
            style: `width:${width.toFixed(1)}%`,
          }),
        ),
        el(
          "span",
          { class: "bar-value", "data-value": String(value) },
          fmtScore(value),
        ),
      ),
    );
  }
  rows.appendChild(
    el(
      "div",
      { class: "bar-row bar-total" },
      el("span", { class: "bar-name" }, "base"),
      el("span", { class: "bar-value", "data-value": String(attribution.base_value) }, fmtScore(attribution.base_value)),
    ),
  );
  rows.appendChild(
    el(
      "div",
      { class: "bar-row bar-total" },
      el("span", { class: "bar-name" }, `final (${attribution.score_kind})`),
      el("span", { class: "bar-value", "data-value": String(attribution.final_score) }, fmtScore(attribution.final_score)),
    ),
  );
  return rows;
}

function explanationPanel(rec: Recommendation): HTMLElement {
  const panel = el("div", { class: "explanation" });
  const top = rec.entries[0];
  if (top && top.attribution) {
    panel.appendChild(el("h4", {}, `Why ${top.display_name}?`));
    panel.appendChild(renderAttributionBars(top.attribution));
  } else {
    panel.appendChild(el("p", { class: "muted" }, "No attribution available."));
  }
  // the near-miss candidate carries the counterfactual, when one exists
  const withNote = rec.entries.find((e) => e.counterfactual);
  if (withNote && withNote.counterfactual) {
    panel.appendChild(
      el("p", { class: "counterfactual" }, withNote.counterfactual.sentence),
    );
  }
  return panel;
}

export class QueueView {
  private root: HTMLElement | null = null;
  private listEl: HTMLElement | null = null;
  private footerEl: HTMLElement | null = null;
  private cursorStack: (number | undefined)[] = [];
  private cursor: number | undefined = undefined;
  private nextCursor: number | null = null;
  private bandFilter = "";
  private typeFilter = "";
  private pageSize: number;

  constructor(
    private client: ApiClient,
    private opts: QueueOptions,
  ) {
    this.pageSize = opts.pageSize ?? PAGE_SIZE;
  }

  async mount(root: HTMLElement): Promise<void> {
    this.root = root;
    clear(root);
    root.appendChild(this.toolbar());
    this.listEl = el("div", { class: "queue-list" });
    this.footerEl = el("div", { class: "queue-footer" });
    root.appendChild(this.listEl);
    root.appendChild(this.footerEl);
    await this.loadPage(undefined, false);
  }

  private toolbar(): HTMLElement {
    const bandSelect = el("select", { class: "band-filter" }) as HTMLSelectElement;
    for (const [value, label] of [
      ["", "all bands"],
      ["AutoEligible", "AutoEligible"],
      ["NeedsReview", "NeedsReview"],
      ["Inconclusive", "Inconclusive"],
    ]) {
      bandSelect.appendChild(el("option", { value }, label));
    }
    const typeSelect = el("select", { class: "type-filter" }) as HTMLSelectElement;
    for (const [value, label] of [
      ["", "all types"],
      ["SourceFile", "SourceFile"],
      ["WarehouseTable", "WarehouseTable"],
      ["ConfigFile", "ConfigFile"],
    ]) {
      typeSelect.appendChild(el("option", { value }, label));
    }
    bandSelect.addEventListener("change", () => {
      this.bandFilter = bandSelect.value;
      this.applyFilters();
    });
    typeSelect.addEventListener("change", () => {
      this.typeFilter = typeSelect.value;
      this.applyFilters();
    });
    return el(
      "div",
      { class: "queue-toolbar" },
      el("label", {}, "band ", bandSelect),
      el("label", {}, "type ", typeSelect),
      el("button", {
        class: "refresh",
        onclick: () => void this.loadPage(this.cursor, false),
      }, "refresh"),
    );
  }

  // filters are cosmetic per page; totals always come from the API
  private applyFilters(): void {
    if (!this.listEl) return;
    for (const card of Array.from(this.listEl.querySelectorAll<HTMLElement>(".card"))) {
      const bandOk = !this.bandFilter || card.dataset.band === this.bandFilter;
      const typeOk = !this.typeFilter || card.dataset.assetType === this.typeFilter;
      card.style.display = bandOk && typeOk ? "" : "none";
    }
  }

  private async loadPage(cursor: number | undefined, pushHistory: boolean): Promise<void> {
    if (!this.listEl || !this.footerEl) return;
    clear(this.listEl);
    this.listEl.appendChild(el("p", { class: "loading" }, "loading…"));
    let page;
    try {
      page = await this.client.recommendations({
        status: this.opts.status,
        cursor,
        limit: this.pageSize,
      });
    } catch (err) {
      clear(this.listEl);
      this.listEl.appendChild(
        el(
          "div",
          { class: "load-error" },
          el("p", {}, "Could not load recommendations."),
          el("button", { onclick: () => void this.loadPage(cursor, false) }, "retry"),
        ),
      );
      if (err instanceof ApiError && this.opts.onConnectionError) {
        this.opts.onConnectionError(err);
      }
      return;
    }
    if (pushHistory) {
      this.cursorStack.push(this.cursor);
    }
    this.cursor = cursor;
    this.nextCursor = page.next_cursor;
    clear(this.listEl);
    if (page.recommendations.length === 0) {
      let message = "End of list.";
      if (cursor === undefined) {
        message =
          this.opts.status === "pending"
            ? "Queue is empty: no pending recommendations."
            : "No decided recommendations yet.";
      }
      this.listEl.appendChild(el("p", { class: "empty-state" }, message));
    } else {
      for (const rec of page.recommendations) {
        this.listEl.appendChild(this.card(rec));
      }
      this.applyFilters();
    }
    this.renderFooter(page.recommendations.length, page.total);
  }

  private renderFooter(shown: number, total: number): void {
    if (!this.footerEl) return;
    clear(this.footerEl);
    const prev = el("button", {
      class: "page-prev",
      disabled: this.cursorStack.length === 0,
      onclick: () => {
        if (this.cursorStack.length === 0) return;
        const back = this.cursorStack.pop();
        void this.loadPage(back, false);
      },
    }, "prev");
    const next = el("button", {
      class: "page-next",
      disabled: this.nextCursor === null,
      onclick: () => {
        if (this.nextCursor !== null) void this.loadPage(this.nextCursor, true);
      },
    }, "next");
    this.footerEl.appendChild(prev);
    this.footerEl.appendChild(next);
    this.footerEl.appendChild(
      el(
        "span",
        { class: "queue-count" },
        `${shown} on this page, `,
        el("span", { class: "queue-total", "data-total": String(total) }, String(total)),
        ` ${this.opts.status} total`,
      ),
    );
  }

  private card(rec: Recommendation): HTMLElement {
    const card = el("div", {
      class: "card" + (rec.band === "Inconclusive" ? " flagged" : ""),
      "data-rec-id": rec.recommendation_id,
      "data-band": rec.band,
      "data-asset-type": rec.asset_type ?? "",
    });
    card.appendChild(
      el(
        "div",
        { class: "card-head" },
        el("strong", { class: "asset-path" }, rec.asset_path ?? rec.asset_id),
        el("span", { class: "chip" }, rec.asset_type ?? "?"),
        el("span", { class: `badge ${bandClass(rec.band)}` }, rec.band),
        el("span", { class: "muted" }, `as of ${fmtEpoch(rec.as_of)}`),
      ),
    );
    const list = el("ol", { class: "candidates" });
    for (const entry of rec.entries.slice(0, TOP_CANDIDATES)) {
      list.appendChild(this.candidateRow(card, rec, entry));
    }
    card.appendChild(list);

    const stateEl = el("div", { class: "decision-state" });
    if (this.opts.status === "pending" && this.opts.canDecide) {
      const explain = el("button", { class: "explain-toggle" }, "explain");
      let panel: HTMLElement | null = null;
      explain.addEventListener("click", () => {
        if (panel) {
          panel.remove();
          panel = null;
        } else {
          panel = explanationPanel(rec);
          card.insertBefore(panel, stateEl);
        }
      });
      const delegate = el("button", { class: "delegate-open" }, "delegate…");
      delegate.addEventListener("click", () => void this.openDelegatePicker(card, rec, stateEl));
      card.appendChild(el("div", { class: "card-actions" }, explain, delegate));
    } else if (this.opts.status === "pending") {
      card.appendChild(
        el("p", { class: "muted no-decide" }, "session cannot decide (read-only)"),
      );
      const explain = el("button", { class: "explain-toggle" }, "explain");
      let panel: HTMLElement | null = null;
      explain.addEventListener("click", () => {
        if (panel) {
          panel.remove();
          panel = null;
        } else {
          panel = explanationPanel(rec);
          card.insertBefore(panel, stateEl);
        }
      });
      card.appendChild(el("div", { class: "card-actions" }, explain));
    } else {
      card.appendChild(this.decidedSummary(rec));
    }
    card.appendChild(stateEl);
    if (rec.assignee) {
      stateEl.appendChild(
        el("p", { class: "assignee-note" }, `delegated to ${rec.assignee}`),
      );
    }
    return card;
  }

  private candidateRow(
    card: HTMLElement,
    rec: Recommendation,
    entry: RecommendationEntry,
  ): HTMLElement {
    const row = el(
      "li",
      { class: "candidate-row", "data-candidate-id": entry.candidate_id },
      el("span", { class: "candidate-name" }, entry.display_name),
      el(
        "span",
        { class: "score", "data-score": String(entry.score) },
        fmtScore(entry.score),
      ),
    );
    if (this.opts.status === "pending" && this.opts.canDecide) {
      row.appendChild(
        el("button", {
          class: "accept",
          onclick: () => void this.submit(card, rec, "Accept", entry),
        }, "accept"),
      );
      row.appendChild(
        el("button", {
          class: "reject",
          onclick: () => void this.submit(card, rec, "Reject", entry),
        }, "reject"),
      );
    }
    return row;
  }

  private decidedSummary(rec: Recommendation): HTMLElement {
    const who = rec.decided_by ?? "?";
    const note = decisionNote(rec.decision);
    return el(
      "div",
      { class: "decided-summary" },
      el("span", { class: "decided-decision" }, `${rec.decision} ${rec.decided_candidate ?? ""}`),
      el("span", { class: "decided-by" }, ` by ${who} at ${fmtEpoch(rec.decided_at)}`),
      note ? el("p", { class: "decision-note" }, note) : null,
    );
  }

  private setButtonsDisabled(card: HTMLElement, disabled: boolean): void {
    for (const btn of Array.from(
      card.querySelectorAll<HTMLButtonElement>("button.accept, button.reject, button.delegate-open, button.delegate-confirm"),
    )) {
      btn.disabled = disabled;
    }
  }

  private async submit(
    card: HTMLElement,
    rec: Recommendation,
    decision: DecisionName,
    entry: RecommendationEntry,
    delegateTo?: string,
  ): Promise<void> {
    const stateEl = card.querySelector<HTMLElement>(".decision-state");
    if (!stateEl) return;
    // optimistic: reflect the expected outcome before the server answers
    this.setButtonsDisabled(card, true);
    clear(stateEl);
    card.classList.add("deciding");
    stateEl.appendChild(
      el(
        "p",
        { class: "optimistic" },
        `${decision} ${entry.display_name}` + (delegateTo ? ` → ${delegateTo}` : "") + " …",
      ),
    );
    try {
      const result = await this.client.decide(
        rec.recommendation_id,
        decision,
        entry.candidate_id,
        delegateTo,
      );
      card.classList.remove("deciding");
      card.classList.add("decided");
      clear(stateEl);
      const owner = result.new_owner ? `new owner: ${result.new_owner}` : "";
      stateEl.appendChild(
        el(
          "p",
          { class: "confirmed" },
          `${decisionNote(result.decision)}${owner ? "; " + owner : ""}`,
        ),
      );
      if (result.recommendation.status === "pending" && result.recommendation.assignee) {
        stateEl.appendChild(
          el("p", { class: "assignee-note" }, `delegated to ${result.recommendation.assignee}`),
        );
        // delegation keeps the item pending, so controls come back
        this.setButtonsDisabled(card, false);
      }
    } catch (err) {
      card.classList.remove("deciding");
      if (err instanceof ApiError && err.status === 409) {
        await this.showConflict(card, rec, stateEl, err);
      } else if (err instanceof ApiError && err.unreachable) {
        clear(stateEl);
        stateEl.appendChild(
          el("p", { class: "inline-error" }, "decision not sent: service unreachable"),
        );
        this.setButtonsDisabled(card, false);
        if (this.opts.onConnectionError) this.opts.onConnectionError(err);
      } else if (err instanceof ApiError) {
        clear(stateEl);
        stateEl.appendChild(
          el("p", { class: "inline-error" }, `${err.code}: ${err.message}`),
        );
        this.setButtonsDisabled(card, false);
      } else {
        throw err;
      }
    }
  }

  private async showConflict(
    card: HTMLElement,
    rec: Recommendation,
    stateEl: HTMLElement,
    err: ApiError,
  ): Promise<void> {
    card.classList.add("decided");
    clear(stateEl);
    const by = typeof err.detail.decided_by === "string" ? err.detail.decided_by : "someone else";
    const what = typeof err.detail.decision === "string" ? err.detail.decision : "a decision";
    const target =
      typeof err.detail.decided_candidate === "string" ? ` ${err.detail.decided_candidate}` : "";
    stateEl.appendChild(
      el(
        "p",
        { class: "conflict" },
        `already decided by ${by}: ${what}${target}`,
      ),
    );
    this.setButtonsDisabled(card, true);
    // refresh from the API so the card shows the authoritative state
    try {
      const fresh = await this.client.recommendation(rec.recommendation_id);
      stateEl.appendChild(this.decidedSummary(fresh));
    } catch {
      // the conflict body already told the story; leave it at that
    }
  }

  private async openDelegatePicker(
    card: HTMLElement,
    rec: Recommendation,
    stateEl: HTMLElement,
  ): Promise<void> {
    const existing = card.querySelector(".delegate-picker");
    if (existing) {
      existing.remove();
      return;
    }
    let choices: Candidate[];
    try {
      // delegation targets: active people and active oncall rotations only
      const [people, oncalls] = await Promise.all([
        this.client.candidates({ type: "Individual", active: "1", limit: 1000 }),
        this.client.candidates({ type: "OncallRotation", active: "1", limit: 1000 }),
      ]);
      choices = [...people.candidates, ...oncalls.candidates];
    } catch (err) {
      if (err instanceof ApiError && err.unreachable && this.opts.onConnectionError) {
        this.opts.onConnectionError(err);
      }
      clear(stateEl);
      stateEl.appendChild(el("p", { class: "inline-error" }, "could not load delegates"));
      return;
    }
    const select = el("select", { class: "delegate-select" }) as HTMLSelectElement;
    for (const candidate of choices) {
      select.appendChild(
        el(
          "option",
          { value: candidate.candidate_id },
          `${candidate.display_name} (${candidate.candidate_type})`,
        ),
      );
    }
    const picker = el(
      "div",
      { class: "delegate-picker" },
      el("label", {}, "delegate to ", select),
      el("button", {
        class: "delegate-confirm",
        onclick: () => {
          const target = select.value;
          picker.remove();
          void this.submit(card, rec, "Delegate", rec.entries[0], target);
        },
      }, "confirm"),
      el("button", { class: "delegate-cancel", onclick: () => picker.remove() }, "cancel"),
    );
    card.insertBefore(picker, stateEl);
  }
}
