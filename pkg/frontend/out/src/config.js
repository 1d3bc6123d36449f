// API base resolution: runtime global wins, then same-origin.
export function apiBase() {
    if (typeof window !== "undefined" && window.LLADA_API_BASE) {
        return window.LLADA_API_BASE;
    }
    return "";
}
