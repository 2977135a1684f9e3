import { describe, expect, it } from 'vitest';

import { draftFromClicks, skewFromClicks, validateDraft } from '../src/calibration.js';
import { rasterizeBand } from '../src/geometry.js';
import type { BandGeometry } from '../src/types.js';
import fixtureJson from './fixtures/band_dryrun.json';

interface FixtureCase {
  request: { geometry: BandGeometry; frame_width: number; frame_height: number };
  response: { lines: [number, number][][] };
}

const fixture = fixtureJson as unknown as FixtureCase[];

describe('skewFromClicks', () => {
  it('measures the calibration reference pair within 0.01 degrees', () => {
    const skew = skewFromClicks([100, 300], [300, 320]);
    const exact = (Math.atan2(20, 200) * 180) / Math.PI;
    expect(Math.abs(skew - exact)).toBeLessThanOrEqual(0.01);
    expect(skew).toBe(5.71);
  });

  it('is 0.00 for a horizontal pair', () => {
    expect(skewFromClicks([100, 300], [300, 300])).toBe(0);
  });

  it('does not depend on click order', () => {
    expect(skewFromClicks([300, 320], [100, 300])).toBe(5.71);
    expect(skewFromClicks([300, 280], [100, 300])).toBe(-5.71);
  });
});

describe('draftFromClicks', () => {
  it('derives anchor, length and skew from the reference pair', () => {
    const draft = draftFromClicks('CAM1', 0, [100, 300], [300, 320]);
    expect(draft).not.toBeNull();
    expect(draft!.geometry).toEqual({
      anchor_x: 100,
      anchor_y: 300,
      length: 200,
      skew_deg: 5.71,
      line_count: 5,
      gap_px: 3,
    });
  });

  it('previews the exact band the service dry-run returns', () => {
    const draft = draftFromClicks('CAM1', 0, [100, 300], [300, 320])!;
    const preview = rasterizeBand(draft.geometry);
    const served = fixture.find((c) => c.request.geometry.skew_deg === 5.71);
    expect(served).toBeDefined();
    expect(preview).toEqual(served!.response.lines);
  });

  it('anchors at the left click regardless of order', () => {
    const a = draftFromClicks('CAM1', 0, [300, 320], [100, 300])!;
    const b = draftFromClicks('CAM1', 0, [100, 300], [300, 320])!;
    expect(a.geometry).toEqual(b.geometry);
  });

  it('refuses clicks without horizontal extent', () => {
    expect(draftFromClicks('CAM1', 0, [100, 300], [100, 350])).toBeNull();
  });
});

describe('validateDraft', () => {
  it('accepts a band that fits the frame', () => {
    const draft = draftFromClicks('CAM1', 0, [100, 300], [300, 320])!;
    expect(validateDraft(draft, 704, 576)).toEqual({ ok: true, message: null });
  });

  it('mirrors the service wording for an out-of-frame band', () => {
    const draft = draftFromClicks('CAM1', 0, [600, 300], [750, 310])!;
    const check = validateDraft(draft, 704, 576);
    expect(check.ok).toBe(false);
    expect(check.message).toMatch(/scan line 0 leaves the 704x576 frame at \(704, /);
  });

  it('rejects skews the detector will not accept', () => {
    const draft = draftFromClicks('CAM1', 0, [100, 0], [102, 500]);
    expect(draft).not.toBeNull(); // two columns of extent, absurd slope
    const check = validateDraft(draft!, 704, 576);
    expect(check.ok).toBe(false);
    expect(check.message).toMatch(/skew_deg/);
  });
});
