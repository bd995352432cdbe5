import type { SlicePayload } from "./types.js";

export interface HeatmapCell {
  ix: number;
  iy: number;
  value: number;
  color: string;
}

export interface TrialMarker {
  x: number;
  y: number;
  recent: boolean;
}

export interface HeatmapModel {
  resolution: number;
  cells: HeatmapCell[];
  axisX: { label: string; min: number; max: number };
  axisY: { label: string; min: number; max: number };
  markers: TrialMarker[];
}

/** Probability 0 maps to the dark extreme, 1 to the bright extreme. */
export function probabilityColor(p: number): string {
  const t = Math.min(1, Math.max(0, p));
  // dark blue -> yellow ramp
  const r = Math.round(20 + 235 * t);
  const g = Math.round(24 + 206 * t);
  const b = Math.round(72 + (40 - 72) * t);
  return `rgb(${r},${g},${b})`;
}

/** Pure mapping from a /slice payload to a drawable model. The ten most
 * recent stimuli are flagged so they can be drawn with a thicker border. */
export function renderSlice(
  slice: SlicePayload,
  dimNames?: string[],
): HeatmapModel {
  const n = slice.resolution;
  if (slice.values.length !== n * n) {
    throw new Error(`slice payload has ${slice.values.length} cells, expected ${n * n}`);
  }
  const cells: HeatmapCell[] = new Array(n * n);
  for (let iy = 0; iy < n; iy++) {
    for (let ix = 0; ix < n; ix++) {
      const value = slice.values[iy * n + ix]!;
      cells[iy * n + ix] = { ix, iy, value, color: probabilityColor(value) };
    }
  }
  const markers: TrialMarker[] = slice.recent_stimuli.map((s) => ({
    x: s[slice.dim_x] ?? 0,
    y: s[slice.dim_y] ?? 0,
    recent: true,
  }));
  const name = (d: number) => dimNames?.[d] ?? `dim ${d}`;
  return {
    resolution: n,
    cells,
    axisX: { label: name(slice.dim_x), min: slice.axis_x[0]!, max: slice.axis_x[n - 1]! },
    axisY: { label: name(slice.dim_y), min: slice.axis_y[0]!, max: slice.axis_y[n - 1]! },
    markers,
  };
}
