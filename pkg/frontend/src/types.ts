// JSON payload shapes of the compute API.

export interface DatasetInfo {
  name: string;
  kind: "model" | "csv";
  n: number;
  columns: string[];
  transform: string;
}

export interface BandCurve {
  median: number[];
  lower: number[];
  upper: number[];
}

export type CurveName = "co" | "quad" | "amplitude" | "phase";

export const CURVE_NAMES: CurveName[] = ["co", "quad", "amplitude", "phase"];

export interface SpectraPayload {
  config_hash: string;
  cached: boolean;
  point: string;
  omega: number[];
  probs: number[];
  local: {
    curves: Record<CurveName, BandCurve>;
    phase_branch_cut: boolean[] | null;
  };
  global: {
    curves: Record<CurveName, BandCurve>;
  };
  nc: {
    r: number;
    local_flagged: number;
    global_flagged: number;
    ok: boolean;
  };
}

export interface JobTicket {
  job: string;
  status: string;
  progress?: number;
}

export interface ComplexPayload {
  config_hash: string;
  omega: number;
  point: string;
  re: number[];
  im: number[];
  probs: number[];
  summary: {
    re: number[]; // [median, lower, upper]
    im: number[];
    modulus: number[];
    argument: number[];
  };
}

export interface RunRequest {
  dataset: string;
  point: string;
  pair: (number | string)[];
  b: [number, number];
  m: number;
  p: 1 | 5;
  window: string;
  grid: number;
  R: number;
  probs: [number, number];
  n?: number;
  seed: number;
  block_len?: number;
}
