// Thin fetch client for the compute API, with async-job polling.

import type { ComplexPayload, DatasetInfo, JobTicket, RunRequest, SpectraPayload } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  body: unknown;
  constructor(status: number, body: unknown) {
    super(`API error ${status}`);
    this.status = status;
    this.body = body;
  }
}

export class ApiClient {
  base: string;
  fetchFn: FetchLike;
  pollIntervalMs: number;

  constructor(base: string, fetchFn?: FetchLike, pollIntervalMs = 400) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    this.pollIntervalMs = pollIntervalMs;
  }

  async listDatasets(): Promise<DatasetInfo[]> {
    const resp = await this.fetchFn(`${this.base}/api/datasets`);
    const body = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, body);
    return body.datasets as DatasetInfo[];
  }

  /** POST the config; transparently polls the job endpoint on a 202 ticket. */
  async requestSpectra(req: RunRequest): Promise<SpectraPayload> {
    const resp = await this.fetchFn(`${this.base}/api/spectra`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    const body = await resp.json();
    if (resp.status === 200) return body as SpectraPayload;
    if (resp.status === 202) return this.pollJob((body as JobTicket).job);
    throw new ApiError(resp.status, body);
  }

  async pollJob(token: string): Promise<SpectraPayload> {
    for (;;) {
      const resp = await this.fetchFn(`${this.base}/api/jobs/${token}`);
      const body = await resp.json();
      if (resp.status === 200) return body as SpectraPayload;
      if (resp.status !== 409) throw new ApiError(resp.status, body);
      await sleep(this.pollIntervalMs);
    }
  }

  async complexAt(configHash: string, omega: number): Promise<ComplexPayload> {
    const url = `${this.base}/api/complex?config=${configHash}&omega=${omega}`;
    const resp = await this.fetchFn(url);
    const body = await resp.json();
    if (!resp.ok) throw new ApiError(resp.status, body);
    return body as ComplexPayload;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
