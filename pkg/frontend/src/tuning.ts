import type { ApiClient } from './api.js';
import type { RedetectResult, Thresholds } from './types.js';

export function violationCount(results: RedetectResult[]): number {
  return results.filter((r) => r.ok && r.violated).length;
}

export function errorEntries(results: RedetectResult[]): RedetectResult[] {
  return results.filter((r) => !r.ok);
}

export interface VerdictFlip {
  frame_id: string;
  before: boolean;
  after: boolean;
}

// Frames whose verdict changed between two redetect passes. Frames that
// errored in either pass are left out; they are reported separately.
export function flippedVerdicts(baseline: RedetectResult[], current: RedetectResult[]): VerdictFlip[] {
  const before = new Map<string, boolean>();
  for (const r of baseline) {
    if (r.ok) before.set(r.frame_id, r.violated === true);
  }
  const flips: VerdictFlip[] = [];
  for (const r of current) {
    if (!r.ok) continue;
    const prev = before.get(r.frame_id);
    const now = r.violated === true;
    if (prev !== undefined && prev !== now) {
      flips.push({ frame_id: r.frame_id, before: prev, after: now });
    }
  }
  return flips;
}

export interface SweepPoint {
  l_th: number;
  count: number;
}

// Sequential on purpose: each redetect batch re-reads checkpoints and
// frames, so firing all sweep points at once would stampede the service.
export async function sweepLth(
  api: ApiClient,
  frameIds: string[],
  lths: number[],
  base: Partial<Thresholds> = {},
): Promise<SweepPoint[]> {
  const points: SweepPoint[] = [];
  for (const l_th of lths) {
    const results = await api.redetect({
      frame_ids: frameIds,
      override_thresholds: { ...base, l_th },
    });
    points.push({ l_th, count: violationCount(results) });
  }
  return points;
}
