/** Wire payloads of the session service. The console never recomputes any of
 * these numbers locally; every displayed value traces to a payload field. */

export interface NextQueryPayload {
  stimulus: number[];
  trial_index: number;
  was_random_exploration: boolean;
}

export interface StatusPayload {
  trial_count: number;
  converged: boolean;
  snr: number | null;
  window_mean: number | null;
  fisher_history: number[];
  class_counts: { "0": number; "1": number };
}

export interface SlicePayload {
  dim_x: number;
  dim_y: number;
  resolution: number;
  axis_x: number[];
  axis_y: number[];
  values: number[];
  std?: number[];
  recent_stimuli: number[][];
}

export interface CreateSessionResponse {
  id: string;
  trial_count: number;
}

export interface ResponseBody {
  stimulus: number[];
  response: 0 | 1;
}

/** Everything the operator screen shows for one session. */
export interface SessionView {
  id: string;
  trialCount: number;
  pending: NextQueryPayload | null;
  converged: boolean;
  snr: number | null;
  windowMean: number | null;
  responseLog: { trial: number; response: 0 | 1 }[];
}
