// Session token persistence. The token is the only thing the client
// remembers between page loads; everything else is re-fetched, so a
// reload always reproduces the view from the API alone.

const TOKEN_KEY = "steward.session_token";

export function loadToken(): string | null {
  try {
    return window.localStorage.getItem(TOKEN_KEY);
  } catch {
    return null;
  }
}

export function saveToken(token: string): void {
  try {
    window.localStorage.setItem(TOKEN_KEY, token);
  } catch {
    // storage disabled: session lasts for the page only
  }
}

export function clearToken(): void {
  try {
    window.localStorage.removeItem(TOKEN_KEY);
  } catch {
    // ignore
  }
}
