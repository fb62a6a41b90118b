/** Single base-URL setting: query param > saved preference > default. */

export const DEFAULT_BASE_URL = "http://127.0.0.1:8000";

const STORAGE_KEY = "agoran.baseUrl";

export interface ConfigSource {
  queryString?: string;
  storage?: Pick<Storage, "getItem" | "setItem">;
}

export function resolveBaseUrl(source: ConfigSource = {}): string {
  const qs = source.queryString ?? (typeof window !== "undefined" ? window.location.search : "");
  const fromQuery = new URLSearchParams(qs).get("base");
  if (fromQuery) return stripSlash(fromQuery);
  const storage = source.storage ?? (typeof window !== "undefined" ? window.localStorage : undefined);
  const saved = storage?.getItem(STORAGE_KEY);
  if (saved) return stripSlash(saved);
  return DEFAULT_BASE_URL;
}

export function saveBaseUrl(url: string, storage?: Pick<Storage, "setItem">): void {
  const target = storage ?? (typeof window !== "undefined" ? window.localStorage : undefined);
  target?.setItem(STORAGE_KEY, stripSlash(url));
}

function stripSlash(url: string): string {
  return url.replace(/\/+$/, "");
}
