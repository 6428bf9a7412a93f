// Entry point: token handling, hash routing between the review queue,
// decision history, and the health dashboard, and a connection banner
// that appears on API failures (retry is always a manual click, never a
// background loop).

import { ApiClient, ApiError, SessionInfo } from "./api.js";
import { DashboardView } from "./dashboard.js";
import { QueueView } from "./queue.js";
import { clearToken, loadToken, saveToken } from "./state.js";
import { el, clear } from "./dom.js";

type Route = "queue" | "history" | "health";

function currentRoute(): Route {
  const hash = window.location.hash.replace(/^#\/?/, "");
  if (hash === "history") return "history";
  if (hash === "health") return "health";
  return "queue";
}

export class App {
  private client: ApiClient | null = null;
  private session: SessionInfo | null = null;
  private banner: HTMLElement;
  private main: HTMLElement;
  private nav: HTMLElement;

  constructor(private root: HTMLElement) {
    this.banner = el("div", { class: "banner hidden", role: "alert" });
    this.nav = el("nav", { class: "topbar" });
    this.main = el("main", { class: "view" });
  }

  async start(): Promise<void> {
    clear(this.root);
    this.root.appendChild(this.banner);
    this.root.appendChild(this.nav);
    this.root.appendChild(this.main);
    window.addEventListener("hashchange", () => void this.renderRoute());
    const token = loadToken();
    if (!token) {
      this.renderTokenForm("Enter your session token to begin.");
      return;
    }
    await this.connect(token);
  }

  private async connect(token: string): Promise<void> {
    const client = new ApiClient(token);
    let session: SessionInfo;
    try {
      session = await client.session();
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        clearToken();
        this.renderTokenForm("That token was not accepted; enter a valid one.");
        return;
      }
      if (err instanceof ApiError && err.unreachable) {
        this.showBanner(err);
        this.renderTokenForm("Service unreachable; check the server and retry.");
        return;
      }
      throw err;
    }
    saveToken(token);
    this.client = client;
    this.session = session;
    this.renderNav();
    await this.renderRoute();
  }

  private renderTokenForm(prompt: string): void {
    clear(this.nav);
    clear(this.main);
    const input = el("input", {
      class: "token-input",
      type: "password",
      placeholder: "session token",
    }) as HTMLInputElement;
    const form = el(
      "form",
      {
        class: "token-form",
        onsubmit: ((event: Event) => {
          event.preventDefault();
          if (input.value.trim()) void this.connect(input.value.trim());
        }) as EventListener,
      },
      el("h2", {}, "Ownership review"),
      el("p", {}, prompt),
      input,
      el("button", { type: "submit" }, "connect"),
    );
    this.main.appendChild(form);
  }

  private renderNav(): void {
    clear(this.nav);
    const links = el(
      "div",
      { class: "nav-links" },
      el("a", { href: "#/queue" }, "queue"),
      el("a", { href: "#/history" }, "history"),
      el("a", { href: "#/health" }, "health"),
    );
    const who = this.session?.actor_id ?? "anonymous";
    const caps = (this.session?.capabilities ?? []).join(", ");
    const badge = el(
      "div",
      { class: "session-badge" },
      el("span", { class: "actor" }, who),
      el("span", { class: "caps muted" }, ` [${caps}]`),
      el("button", {
        class: "signout",
        onclick: () => {
          clearToken();
          this.client = null;
          this.session = null;
          this.renderTokenForm("Signed out. Enter a session token to begin.");
        },
      }, "sign out"),
    );
    this.nav.appendChild(links);
    this.nav.appendChild(badge);
  }

  private showBanner(err: ApiError): void {
    clear(this.banner);
    this.banner.classList.remove("hidden");
    this.banner.appendChild(
      el("span", {}, `Connection problem: ${err.message} `),
    );
    this.banner.appendChild(
      el("button", {
        class: "banner-retry",
        onclick: () => {
          this.hideBanner();
          void this.renderRoute();
        },
      }, "retry"),
    );
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
    clear(this.banner);
  }

  async renderRoute(): Promise<void> {
    if (!this.client || !this.session) return;
    this.hideBanner();
    const canDecide = this.session.capabilities.includes("Decide");
    const onConnectionError = (err: ApiError) => {
      if (err.unreachable) this.showBanner(err);
    };
    const route = currentRoute();
    for (const link of Array.from(this.nav.querySelectorAll("a"))) {
      link.classList.toggle("active", link.getAttribute("href") === `#/${route}`);
    }
    clear(this.main);
    if (route === "health") {
      await new DashboardView(this.client, { onConnectionError }).mount(this.main);
    } else if (route === "history") {
      await new QueueView(this.client, {
        status: "decided",
        canDecide: false,
        onConnectionError,
      }).mount(this.main);
    } else {
      await new QueueView(this.client, {
        status: "pending",
        canDecide,
        onConnectionError,
      }).mount(this.main);
    }
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root) void new App(root).start();
}

// auto-boot in the browser; tests import App and drive it directly
if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
