import { firstOutOfBounds, rasterizeBand, roundHalfAway, type Point } from './geometry.js';
import type { BandGeometry } from './types.js';

export interface CalibrationDraft {
  camera_id: string;
  pan_index: number;
  point_a: Point;
  point_b: Point;
  geometry: BandGeometry;
}

export const DEFAULT_LINE_COUNT = 5;
export const DEFAULT_GAP_PX = 3;

// Skew from two clicked points in degrees, rounded to the two decimals the
// config format keeps. The points are normalized left-to-right first so the
// sign only depends on whether the line descends, not on click order.
export function skewFromClicks(a: Point, b: Point): number {
  const [left, right] = a[0] <= b[0] ? [a, b] : [b, a];
  const deg = (Math.atan2(right[1] - left[1], right[0] - left[0]) * 180) / Math.PI;
  return roundHalfAway(deg * 100) / 100;
}

export function draftFromClicks(
  cameraId: string,
  panIndex: number,
  a: Point,
  b: Point,
  lineCount = DEFAULT_LINE_COUNT,
  gapPx = DEFAULT_GAP_PX,
): CalibrationDraft | null {
  if (a[0] === b[0]) return null; // vertical pair, no horizontal extent
  const left = a[0] <= b[0] ? a : b;
  return {
    camera_id: cameraId,
    pan_index: panIndex,
    point_a: a,
    point_b: b,
    geometry: {
      anchor_x: left[0],
      anchor_y: left[1],
      length: Math.abs(b[0] - a[0]),
      skew_deg: skewFromClicks(a, b),
      line_count: lineCount,
      gap_px: gapPx,
    },
  };
}

export interface DraftValidation {
  ok: boolean;
  message: string | null;
}

// Local pre-check with the same wording shape the service uses, so the
// apply button can be disabled before any request happens.
export function validateDraft(draft: CalibrationDraft, frameWidth: number, frameHeight: number): DraftValidation {
  let lines;
  try {
    lines = rasterizeBand(draft.geometry);
  } catch (e) {
    return { ok: false, message: e instanceof Error ? e.message : String(e) };
  }
  const oob = firstOutOfBounds(lines, frameWidth, frameHeight);
  if (oob) {
    return {
      ok: false,
      message:
        `scan line ${oob.line_index} leaves the ${frameWidth}x${frameHeight} frame ` +
        `at (${oob.coord[0]}, ${oob.coord[1]})`,
    };
  }
  return { ok: true, message: null };
}
