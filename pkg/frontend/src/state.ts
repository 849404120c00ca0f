// Explorer parameter state: the RunConfig fragment the panels depend on.

import type { DatasetInfo, RunRequest } from "./types";

export interface ExplorerParams {
  dataset: string;
  pair: (number | string)[];
  point: string;
  b: number;
  m: number;
  p: 1 | 5;
  window: string;
  grid: number;
  R: number;
  seed: number;
  blockLen: number | null;
  n: number | null;
}

export const DEFAULT_PARAMS: ExplorerParams = {
  dataset: "gaussian-wn-demo",
  pair: [0, 1],
  point: "50::50",
  b: 0.6,
  m: 10,
  p: 5,
  window: "tukey-hanning",
  grid: 512,
  R: 20,
  seed: 1,
  blockLen: null,
  n: null,
};

export const POINT_GRID = [
  "10::10", "10::50", "10::90",
  "50::10", "50::50", "50::90",
  "90::10", "90::50", "90::90",
];

export class ExplorerState {
  params: ExplorerParams;
  datasets: DatasetInfo[] = [];
  pinnedFrequencies: number[] = [];
  private listeners: Array<() => void> = [];

  constructor(params: Partial<ExplorerParams> = {}) {
    this.params = { ...DEFAULT_PARAMS, ...params };
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  set<K extends keyof ExplorerParams>(key: K, value: ExplorerParams[K]): void {
    this.params = { ...this.params, [key]: value };
    for (const listener of this.listeners) listener();
  }

  setDatasets(datasets: DatasetInfo[]): void {
    this.datasets = datasets;
  }

  currentDataset(): DatasetInfo | undefined {
    return this.datasets.find((d) => d.name === this.params.dataset);
  }

  togglePin(omega: number): void {
    const idx = this.pinnedFrequencies.indexOf(omega);
    if (idx >= 0) this.pinnedFrequencies.splice(idx, 1);
    else this.pinnedFrequencies.push(omega);
  }

  toRequest(): RunRequest {
    const p = this.params;
    const req: RunRequest = {
      dataset: p.dataset,
      point: p.point,
      pair: p.pair,
      b: [p.b, p.b],
      m: p.m,
      p: p.p,
      window: p.window,
      grid: p.grid,
      R: p.R,
      probs: [0.05, 0.95],
      seed: p.seed,
    };
    if (p.n !== null) req.n = p.n;
    const entry = this.currentDataset();
    if (entry?.kind === "csv") req.block_len = p.blockLen ?? 100;
    return req;
  }
}
