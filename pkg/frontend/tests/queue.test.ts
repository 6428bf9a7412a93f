import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { QueueView } from "../src/queue.js";
import { fmtScore } from "../src/format.js";
import { installFakeFetch, makeRec, makeWorld, FakeWorld } from "./fake_api.js";

function root(): HTMLElement {
  document.body.innerHTML = "<div id='host'></div>";
  return document.getElementById("host") as HTMLElement;
}

function pendingView(client: ApiClient, extra: Partial<{ canDecide: boolean; pageSize: number; onConnectionError: (e: ApiError) => void }> = {}): QueueView {
  return new QueueView(client, {
    status: "pending",
    canDecide: extra.canDecide ?? true,
    pageSize: extra.pageSize,
    onConnectionError: extra.onConnectionError,
  });
}

describe("QueueView", () => {
  let world: FakeWorld;
  let client: ApiClient;

  beforeEach(() => {
    world = makeWorld();
    installFakeFetch(world);
    client = new ApiClient("tok-alice");
  });

  it("shows an empty state for an empty queue", async () => {
    const host = root();
    await pendingView(client).mount(host);
    expect(host.querySelector(".empty-state")?.textContent).toContain(
      "no pending recommendations",
    );
    expect(host.querySelectorAll(".card").length).toBe(0);
  });

  it("renders one card with top-3 candidates and a band badge", async () => {
    world.recommendations = [makeRec(1, { band: "NeedsReview" })];
    const host = root();
    await pendingView(client).mount(host);
    const cards = host.querySelectorAll(".card");
    expect(cards.length).toBe(1);
    const rows = cards[0].querySelectorAll(".candidate-row");
    expect(rows.length).toBe(3);
    expect(cards[0].querySelector(".badge")?.textContent).toBe("NeedsReview");
    const rec = world.recommendations[0];
    rows.forEach((row, i) => {
      const entry = rec.entries[i];
      expect(row.querySelector(".candidate-name")?.textContent).toBe(entry.display_name);
      const score = row.querySelector(".score");
      expect(score?.getAttribute("data-score")).toBe(String(entry.score));
      expect(score?.textContent).toBe(fmtScore(entry.score));
    });
  });

  it("flags Inconclusive items visually", async () => {
    world.recommendations = [
      makeRec(1, { band: "Inconclusive" }),
      makeRec(2, { band: "AutoEligible" }),
    ];
    const host = root();
    await pendingView(client).mount(host);
    const flagged = host.querySelectorAll(".card.flagged");
    expect(flagged.length).toBe(1);
    expect(flagged[0].getAttribute("data-band")).toBe("Inconclusive");
  });

  it("pages through 250 items and reports the API total", async () => {
    for (let i = 0; i < 250; i++) world.recommendations.push(makeRec(i));
    const host = root();
    await pendingView(client).mount(host);
    const seen = new Set<string>();
    const totals = new Set<string>();
    for (let page = 0; page < 6; page++) {
      for (const card of Array.from(host.querySelectorAll<HTMLElement>(".card"))) {
        seen.add(card.dataset.recId ?? "");
      }
      const total = host.querySelector<HTMLElement>(".queue-total");
      if (host.querySelectorAll(".card").length > 0) {
        expect(total?.dataset.total).toBe("250");
        expect(total?.textContent).toBe("250");
      }
      const next = host.querySelector<HTMLButtonElement>(".page-next");
      if (!next || next.disabled) break;
      next.click();
      await vi.waitFor(() => {
        expect(host.querySelector(".loading")).toBeNull();
      });
    }
    expect(seen.size).toBe(250);
  });

  it("filters by band per page without touching the total", async () => {
    world.recommendations = [
      makeRec(1, { band: "Inconclusive" }),
      makeRec(2, { band: "NeedsReview" }),
      makeRec(3, { band: "NeedsReview" }),
    ];
    const host = root();
    await pendingView(client).mount(host);
    const select = host.querySelector<HTMLSelectElement>(".band-filter")!;
    select.value = "Inconclusive";
    select.dispatchEvent(new Event("change"));
    const cards = Array.from(host.querySelectorAll<HTMLElement>(".card"));
    const visible = cards.filter((c) => c.style.display !== "none");
    expect(visible.length).toBe(1);
    expect(visible[0].dataset.band).toBe("Inconclusive");
    expect(host.querySelector<HTMLElement>(".queue-total")?.dataset.total).toBe("3");
  });

  it("opens an explanation with attribution bars and the counterfactual sentence verbatim", async () => {
    world.recommendations = [makeRec(5)];
    const host = root();
    await pendingView(client).mount(host);
    (host.querySelector(".explain-toggle") as HTMLButtonElement).click();
    const panel = host.querySelector(".explanation")!;
    expect(panel).not.toBeNull();
    expect(panel.querySelector("h4")?.textContent).toBe("Why User 1?");
    const rec = world.recommendations[0];
    const contributions = rec.entries[0].attribution!.contributions;
    const rows = panel.querySelectorAll(".bar-row:not(.bar-total)");
    expect(rows.length).toBe(contributions.length);
    rows.forEach((row, i) => {
      expect(row.querySelector(".bar-name")?.textContent).toBe(contributions[i][0]);
      expect(row.querySelector(".bar-value")?.getAttribute("data-value")).toBe(
        String(contributions[i][1]),
      );
    });
    // recency_days carries a negative weight in the fixture
    expect(rows[1].querySelector(".bar.neg")).not.toBeNull();
    expect(rows[0].querySelector(".bar.pos")).not.toBeNull();
    const sentence = rec.entries[3].counterfactual!.sentence;
    expect(panel.querySelector(".counterfactual")?.textContent).toBe(sentence);
    (host.querySelector(".explain-toggle") as HTMLButtonElement).click();
    expect(host.querySelector(".explanation")).toBeNull();
  });

  it("accepts optimistically, then confirms and disables the controls", async () => {
    world.recommendations = [makeRec(1)];
    let release: () => void = () => {};
    world.decisionGate = new Promise((r) => {
      release = r;
    });
    const host = root();
    await pendingView(client).mount(host);
    const accept = host.querySelector<HTMLButtonElement>(".candidate-row .accept")!;
    accept.click();
    // optimistic state lands before the server answers
    expect(host.querySelector(".optimistic")?.textContent).toContain("Accept User 1");
    expect(accept.disabled).toBe(true);
    release();
    await vi.waitFor(() => {
      expect(host.querySelector(".confirmed")).not.toBeNull();
    });
    const confirmed = host.querySelector(".confirmed")!;
    expect(confirmed.textContent).toContain("ownership transferred");
    expect(confirmed.textContent).toContain("new owner: u1");
    expect(host.querySelector(".card")?.classList.contains("decided")).toBe(true);
    for (const btn of Array.from(
      host.querySelectorAll<HTMLButtonElement>(".accept, .reject, .delegate-open"),
    )) {
      expect(btn.disabled).toBe(true);
    }
    expect(world.recommendations[0].status).toBe("decided");
    expect(world.recommendations[0].decided_by).toBe("alice");
  });

  it("drops decided items from the queue on refresh and shows them in history", async () => {
    world.recommendations = [makeRec(1), makeRec(2)];
    const host = root();
    await pendingView(client).mount(host);
    const firstReject = host.querySelector<HTMLButtonElement>(".candidate-row .reject")!;
    firstReject.click();
    await vi.waitFor(() => {
      expect(host.querySelector(".confirmed")).not.toBeNull();
    });
    expect(host.querySelector(".confirmed")?.textContent).toContain("negative label");
    (host.querySelector(".refresh") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(host.querySelectorAll(".card").length).toBe(1);
    });
    expect(host.querySelector(".card")?.getAttribute("data-rec-id")).toBe("rec-00000002");

    const historyHost = root();
    await new QueueView(client, { status: "decided", canDecide: false }).mount(historyHost);
    const row = historyHost.querySelector(".card")!;
    expect(row.getAttribute("data-rec-id")).toBe("rec-00000001");
    expect(row.querySelector(".decided-decision")?.textContent).toContain("Reject u1");
    expect(row.querySelector(".decision-note")?.textContent).toContain("negative label recorded");
    expect(row.querySelector(".decided-by")?.textContent).toContain("alice");
    expect(row.querySelectorAll("button.accept, button.reject").length).toBe(0);
  });

  it("surfaces a conflict with who decided first and refreshes the card", async () => {
    world.recommendations = [makeRec(1)];
    const host = root();
    await pendingView(client).mount(host);
    // another session decides while our page is open
    const rec = world.recommendations[0];
    rec.status = "decided";
    rec.decided_by = "bob";
    rec.decision = "Reject";
    rec.decided_candidate = "u1";
    rec.decided_at = 1700000500;
    host.querySelector<HTMLButtonElement>(".candidate-row .accept")!.click();
    await vi.waitFor(() => {
      expect(host.querySelector(".conflict")).not.toBeNull();
    });
    const conflict = host.querySelector(".conflict")!;
    expect(conflict.textContent).toContain("already decided by bob");
    expect(conflict.textContent).toContain("Reject u1");
    await vi.waitFor(() => {
      expect(host.querySelector(".decided-summary")).not.toBeNull();
    });
    expect(host.querySelector(".decided-by")?.textContent).toContain("bob");
    for (const btn of Array.from(
      host.querySelectorAll<HTMLButtonElement>(".accept, .reject, .delegate-open"),
    )) {
      expect(btn.disabled).toBe(true);
    }
  });

  it("keeps inline non-conflict errors retryable", async () => {
    world.recommendations = [makeRec(1)];
    const host = root();
    await pendingView(client).mount(host);
    world.failNetwork = true;
    const seen: ApiError[] = [];
    const view = new QueueView(client, {
      status: "pending",
      canDecide: true,
      onConnectionError: (e) => seen.push(e),
    });
    const host2 = root();
    world.failNetwork = false;
    await view.mount(host2);
    world.failNetwork = true;
    host2.querySelector<HTMLButtonElement>(".candidate-row .accept")!.click();
    await vi.waitFor(() => {
      expect(host2.querySelector(".inline-error")).not.toBeNull();
    });
    expect(host2.querySelector(".inline-error")?.textContent).toContain("unreachable");
    expect(seen.length).toBe(1);
    // controls come back so the reviewer can retry by hand
    expect(host2.querySelector<HTMLButtonElement>(".candidate-row .accept")!.disabled).toBe(false);
    expect(world.recommendations[0].status).toBe("pending");
  });

  it("restricts the delegate picker to active individuals and oncall rotations", async () => {
    world.recommendations = [makeRec(1)];
    world.candidates = [
      { candidate_id: "u2", candidate_type: "Individual", display_name: "Uma", org_node_id: "n1", active: true },
      { candidate_id: "u9", candidate_type: "Individual", display_name: "Gone", org_node_id: "n1", active: false },
      { candidate_id: "t1", candidate_type: "Team", display_name: "Core Team", org_node_id: "n1", active: true },
      { candidate_id: "oc1", candidate_type: "OncallRotation", display_name: "Oncall Seven", org_node_id: null, active: true },
    ];
    const host = root();
    await pendingView(client).mount(host);
    host.querySelector<HTMLButtonElement>(".delegate-open")!.click();
    await vi.waitFor(() => {
      expect(host.querySelector(".delegate-picker")).not.toBeNull();
    });
    const options = Array.from(host.querySelectorAll<HTMLOptionElement>(".delegate-select option"));
    expect(options.map((o) => o.value)).toEqual(["u2", "oc1"]);
    expect(options[1].textContent).toBe("Oncall Seven (OncallRotation)");

    const select = host.querySelector<HTMLSelectElement>(".delegate-select")!;
    select.value = "oc1";
    host.querySelector<HTMLButtonElement>(".delegate-confirm")!.click();
    await vi.waitFor(() => {
      expect(host.querySelector(".assignee-note")).not.toBeNull();
    });
    expect(host.querySelector(".assignee-note")?.textContent).toContain("delegated to oc1");
    const call = world.calls.find((c) => c.method === "POST")!;
    expect(call.body?.decision).toBe("Delegate");
    expect(call.body?.delegate_to).toBe("oc1");
    // delegation keeps the item pending and decidable
    expect(world.recommendations[0].status).toBe("pending");
    expect(host.querySelector<HTMLButtonElement>(".candidate-row .accept")!.disabled).toBe(false);
  });

  it("renders read-only cards when the session cannot decide", async () => {
    world.recommendations = [makeRec(1)];
    const host = root();
    await pendingView(client, { canDecide: false }).mount(host);
    expect(host.querySelectorAll("button.accept, button.reject, button.delegate-open").length).toBe(0);
    expect(host.querySelector(".no-decide")?.textContent).toContain("read-only");
    expect(host.querySelector(".explain-toggle")).not.toBeNull();
  });

  it("shows a retryable load error and reports the connection failure", async () => {
    world.recommendations = [makeRec(1)];
    world.failNetwork = true;
    const seen: ApiError[] = [];
    const host = root();
    await pendingView(client, { onConnectionError: (e) => seen.push(e) }).mount(host);
    expect(host.querySelector(".load-error")).not.toBeNull();
    expect(seen.length).toBe(1);
    expect(seen[0].unreachable).toBe(true);
    world.failNetwork = false;
    host.querySelector<HTMLButtonElement>(".load-error button")!.click();
    await vi.waitFor(() => {
      expect(host.querySelectorAll(".card").length).toBe(1);
    });
  });
});
