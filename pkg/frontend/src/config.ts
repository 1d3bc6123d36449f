// API base resolution: runtime global wins, then same-origin.

declare global {
  interface Window {
    LLADA_API_BASE?: string;
  }
}

export function apiBase(): string {
  if (typeof window !== "undefined" && window.LLADA_API_BASE) {
    return window.LLADA_API_BASE;
  }
  return "";
}
