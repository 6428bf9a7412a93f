// Display formatting. Raw API values are kept on data-* attributes by
// the views; these helpers only shape the visible text.

export function fmtScore(value: number): string {
  return value.toFixed(4);
}

export function fmtCount(value: number): string {
  return String(value);
}

export function fmtRate(value: number): string {
  return value.toFixed(4);
}

export function fmtEpoch(seconds: number | null): string {
  if (seconds === null) return "-";
  return new Date(seconds * 1000).toISOString().replace("T", " ").slice(0, 16) + " UTC";
}

export function fmtDay(seconds: number): string {
  return new Date(seconds * 1000).toISOString().slice(0, 10);
}

const BAND_CLASSES: Record<string, string> = {
  AutoEligible: "band-auto",
  NeedsReview: "band-review",
  Inconclusive: "band-inconclusive",
};

export function bandClass(band: string): string {
  return BAND_CLASSES[band] ?? "band-other";
}

export function decisionNote(decision: string | null): string {
  if (decision === "Accept") return "accepted; ownership transferred";
  if (decision === "Reject") return "rejected; negative label recorded";
  if (decision === "Delegate") return "delegated for review";
  return "";
}
