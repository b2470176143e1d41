/** Wire types, mirroring the API's field names exactly. */

export type BenchRecord = Record<string, unknown>;

export interface RecordsResponse {
  records: BenchRecord[];
  count: number;
}

export interface MetaResponse {
  accelerators: string[];
  models: string[];
  scenarios: string[];
  data_types: string[];
  divisions: string[];
  vendors: string[];
}

export interface CostedPrediction {
  accelerator_key: string;
  predicted_per_accel_throughput: number | null;
  accelerators_needed: number;
  tokens_per_dollar: number | null;
  fits_memory: boolean;
  support: number;
  constraint_tags: string[];
  extrapolated: boolean;
  feasible: boolean;
}

export interface PredictResponse {
  results: CostedPrediction[];
}

export interface PredictRequest {
  params_b: number;
  weight_data_type: string;
  scenario: string;
  min_throughput?: number | null;
  max_ttft?: number | null;
  must_fit_memory?: boolean;
  candidates?: string[] | null;
  costs: Record<string, number>;
  memory_gb?: Record<string, number>;
}
