import { describe, expect, it } from 'vitest';

import { bandBounds, firstOutOfBounds, rasterizeBand, roundHalfAway } from '../src/geometry.js';
import type { BandGeometry } from '../src/types.js';
import fixtureJson from './fixtures/band_dryrun.json';

interface FixtureCase {
  request: { geometry: BandGeometry; frame_width: number; frame_height: number };
  response: {
    lines: [number, number][][];
    bounds: { x_min: number; y_min: number; x_max: number; y_max: number };
  };
}

const fixture = fixtureJson as unknown as FixtureCase[];

describe('roundHalfAway', () => {
  it('rounds halves away from zero on both sides', () => {
    expect(roundHalfAway(0.5)).toBe(1);
    expect(roundHalfAway(1.5)).toBe(2);
    expect(roundHalfAway(2.4)).toBe(2);
    expect(roundHalfAway(-0.5)).toBe(-1);
    expect(roundHalfAway(-1.5)).toBe(-2);
    expect(roundHalfAway(-2.4)).toBe(-2);
    expect(roundHalfAway(0)).toBe(0);
  });

  it('differs from Math.round exactly on negative halves', () => {
    expect(Math.round(-0.5)).toBe(-0); // the reason Math.round is not used
    expect(roundHalfAway(-0.5)).toBe(-1);
  });
});

describe('rasterizeBand', () => {
  it('reproduces every service dry-run fixture coordinate for coordinate', () => {
    expect(fixture.length).toBeGreaterThan(0);
    for (const c of fixture) {
      const lines = rasterizeBand(c.request.geometry);
      expect(lines).toEqual(c.response.lines);
      expect(bandBounds(lines)).toEqual(c.response.bounds);
      expect(firstOutOfBounds(lines, c.request.frame_width, c.request.frame_height)).toBeNull();
    }
  });

  it('keeps axis-aligned lines on exact rows', () => {
    const geom: BandGeometry = {
      anchor_x: 10,
      anchor_y: 40,
      length: 25,
      skew_deg: 0,
      line_count: 5,
      gap_px: 3,
    };
    const lines = rasterizeBand(geom);
    expect(lines).toHaveLength(5);
    lines.forEach((line, k) => {
      expect(line).toHaveLength(25);
      for (const [x, y] of line) {
        expect(y).toBe(40 + k * 3);
        expect(x).toBeGreaterThanOrEqual(10);
        expect(x).toBeLessThan(35);
      }
    });
  });

  it('descends for positive skew and climbs for negative', () => {
    const base: BandGeometry = {
      anchor_x: 0,
      anchor_y: 100,
      length: 100,
      skew_deg: 10,
      line_count: 1,
      gap_px: 3,
    };
    const down = rasterizeBand(base)[0]!;
    const up = rasterizeBand({ ...base, skew_deg: -10 })[0]!;
    expect(down[down.length - 1]![1]).toBeGreaterThan(100);
    expect(up[up.length - 1]![1]).toBeLessThan(100);
  });

  it('rejects impossible geometry', () => {
    const geom: BandGeometry = {
      anchor_x: 0,
      anchor_y: 0,
      length: 0,
      skew_deg: 0,
      line_count: 5,
      gap_px: 3,
    };
    expect(() => rasterizeBand(geom)).toThrow(/length/);
    expect(() => rasterizeBand({ ...geom, length: 10, skew_deg: 86 })).toThrow(/skew_deg/);
    expect(() => rasterizeBand({ ...geom, length: 10, line_count: 0 })).toThrow(/line_count/);
  });

  it('reports the first out-of-frame sample like the service does', () => {
    const geom: BandGeometry = {
      anchor_x: 90,
      anchor_y: 95,
      length: 20,
      skew_deg: 0,
      line_count: 2,
      gap_px: 3,
    };
    const lines = rasterizeBand(geom);
    expect(firstOutOfBounds(lines, 200, 200)).toBeNull();
    // second line sits at y=98; a 97-row frame cannot hold it
    expect(firstOutOfBounds(lines, 200, 98)).toEqual({ line_index: 1, coord: [90, 98] });
    // x overflow is caught on the top line first
    expect(firstOutOfBounds(lines, 100, 200)).toEqual({ line_index: 0, coord: [100, 95] });
  });
});
