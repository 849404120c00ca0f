// Debounced request orchestration with stale-response discard.
//
// Parameter edits call schedule(); after the debounce window a single
// request goes out for the latest config.  Responses are matched against
// the key of the most recently issued request, so a panel never renders a
// superseded config: the displayed config hash always belongs to the last
// request the user caused.

import { ApiClient } from "./api";
import type { RunRequest, SpectraPayload } from "./types";

export const DEBOUNCE_MS = 250;

export class SpectraController {
  private api: ApiClient;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private latestKey = "";
  private inFlight = false;
  private pendingConfig: RunRequest | null = null;
  requestCount = 0;
  payload: SpectraPayload | null = null;
  onPayload: (payload: SpectraPayload) => void = () => {};
  onError: (err: unknown) => void = () => {};

  constructor(api: ApiClient) {
    this.api = api;
  }

  /** Queue a request for this config; earlier queued configs are replaced. */
  schedule(config: RunRequest): void {
    this.pendingConfig = config;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.issueNow();
    }, DEBOUNCE_MS);
  }

  /** Issue immediately (initial load); still subject to stale discard. */
  async issueNow(): Promise<void> {
    const config = this.pendingConfig;
    if (config === null) return;
    if (this.inFlight) {
      // keep it pending; the in-flight completion reissues the newest config
      return;
    }
    this.pendingConfig = null;
    const key = JSON.stringify(config);
    this.latestKey = key;
    this.inFlight = true;
    this.requestCount += 1;
    try {
      const payload = await this.api.requestSpectra(config);
      if (this.latestKey === key && this.pendingConfig === null) {
        this.payload = payload;
        this.onPayload(payload);
      }
    } catch (err) {
      if (this.latestKey === key) this.onError(err);
    } finally {
      this.inFlight = false;
      if (this.pendingConfig !== null) void this.issueNow();
    }
  }

  get displayedHash(): string {
    return this.payload?.config_hash ?? "";
  }
}
