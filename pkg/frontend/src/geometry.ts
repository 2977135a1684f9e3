// Client-side copy of the server's band rasterization. Every preview the
// console draws must land on exactly the pixels detection will sample, so
// the rounding rule and the line walk below are kept coordinate-identical
// to the service (pinned by tests/fixtures/band_dryrun.json).

import type { BandGeometry } from './types.js';

export type Point = [number, number];

export interface BandBounds {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
}

// Round to nearest, halves away from zero. Math.round() rounds -0.5 up to
// -0, which is not what the server does.
export function roundHalfAway(x: number): number {
  return x >= 0 ? Math.floor(x + 0.5) : Math.ceil(x - 0.5);
}

function bresenham(x0: number, y0: number, x1: number, y1: number): Point[] {
  const points: Point[] = [];
  const dx = Math.abs(x1 - x0);
  const dy = Math.abs(y1 - y0);
  const sx = x0 < x1 ? 1 : -1;
  const sy = y0 < y1 ? 1 : -1;
  let err = dx - dy;
  let x = x0;
  let y = y0;
  for (;;) {
    points.push([x, y]);
    if (x === x1 && y === y1) break;
    const e2 = 2 * err;
    if (e2 > -dy) {
      err -= dy;
      x += sx;
    }
    if (e2 < dx) {
      err += dx;
      y += sy;
    }
  }
  return points;
}

export function rasterizeBand(geom: BandGeometry): Point[][] {
  if (geom.length < 1) throw new Error(`length must be >= 1, got ${geom.length}`);
  if (geom.line_count < 1) throw new Error(`line_count must be >= 1, got ${geom.line_count}`);
  if (geom.gap_px < 0) throw new Error(`gap_px must be >= 0, got ${geom.gap_px}`);
  if (!(Math.abs(geom.skew_deg) <= 85)) {
    throw new Error(`skew_deg must lie in [-85, 85], got ${geom.skew_deg}`);
  }
  const xEnd = geom.anchor_x + geom.length - 1;
  const dyTotal = roundHalfAway((geom.length - 1) * Math.tan((geom.skew_deg * Math.PI) / 180));
  const line0 = bresenham(geom.anchor_x, geom.anchor_y, xEnd, geom.anchor_y + dyTotal);
  const lines: Point[][] = [];
  for (let k = 0; k < geom.line_count; k++) {
    const shift = k * geom.gap_px;
    lines.push(line0.map(([x, y]) => [x, y + shift]));
  }
  return lines;
}

export function bandBounds(lines: Point[][]): BandBounds {
  let xMin = Infinity;
  let yMin = Infinity;
  let xMax = -Infinity;
  let yMax = -Infinity;
  for (const line of lines) {
    for (const [x, y] of line) {
      if (x < xMin) xMin = x;
      if (y < yMin) yMin = y;
      if (x > xMax) xMax = x;
      if (y > yMax) yMax = y;
    }
  }
  return { x_min: xMin, y_min: yMin, x_max: xMax, y_max: yMax };
}

// First sample outside the frame, or null when the whole band fits.
export function firstOutOfBounds(
  lines: Point[][],
  frameWidth: number,
  frameHeight: number,
): { line_index: number; coord: Point } | null {
  for (let k = 0; k < lines.length; k++) {
    for (const [x, y] of lines[k]!) {
      if (x < 0 || y < 0 || x >= frameWidth || y >= frameHeight) {
        return { line_index: k, coord: [x, y] };
      }
    }
  }
  return null;
}
