import type { StatusPayload } from "./types.js";

export type GaugeBadge = "collecting" | "converging" | "converged";

export interface GaugeState {
  snr: number | null;
  cutoff: number;
  windowMean: number | null;
  badge: GaugeBadge;
}

export const DEFAULT_SNR_CUTOFF = 10;

/** Pure mapping from a /status payload to the convergence gauge.
 *
 * The badge mirrors the server's convergence flag exactly; "collecting" means
 * the windowed statistic does not exist yet (snr absent), "converging" that it
 * exists but the server has not declared convergence. */
export function mapStatusToGauge(
  status: Pick<StatusPayload, "converged" | "snr" | "window_mean">,
  cutoff: number = DEFAULT_SNR_CUTOFF,
): GaugeState {
  const snr = status.snr ?? null;
  const badge: GaugeBadge = status.converged
    ? "converged"
    : snr === null
      ? "collecting"
      : "converging";
  return { snr, cutoff, windowMean: status.window_mean ?? null, badge };
}

export function gaugeLabel(state: GaugeState): string {
  switch (state.badge) {
    case "collecting":
      return "collecting responses";
    case "converging":
      return `converging (SNR ${state.snr!.toFixed(2)} / cutoff ${state.cutoff})`;
    case "converged":
      return `converged (SNR ${state.snr === null ? ">= cutoff" : state.snr.toFixed(2)})`;
  }
}
