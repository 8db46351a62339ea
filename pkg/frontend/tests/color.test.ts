import { describe, expect, it } from 'vitest';

import { colorize, legendTicks, minmaxNormalize, valueToColor, VIRIDIS256 } from '../src/color.js';

describe('viridis table', () => {
  it('has 256 well-formed entries', () => {
    expect(VIRIDIS256).toHaveLength(256);
    for (const c of VIRIDIS256) expect(c).toMatch(/^#[0-9a-f]{6}$/);
  });

  it('maps the unit interval onto the table ends', () => {
    expect(valueToColor(0)).toBe(VIRIDIS256[0]);
    expect(valueToColor(1)).toBe(VIRIDIS256[255]);
    expect(valueToColor(0.5)).toBe(VIRIDIS256[128]);
  });
});

describe('minmaxNormalize', () => {
  it('hits 0 and 1 for non-constant input', () => {
    expect(minmaxNormalize([2, 4, 6])).toEqual([0, 0.5, 1]);
  });

  it('maps constant vectors to zeros', () => {
    expect(minmaxNormalize([3, 3, 3])).toEqual([0, 0, 0]);
  });

  it('handles empty input', () => {
    expect(minmaxNormalize([])).toEqual([]);
  });
});

describe('colorize', () => {
  it('reports the raw value range for the legend', () => {
    const { colors, min, max } = colorize([-5, 0, 10]);
    expect(min).toBe(-5);
    expect(max).toBe(10);
    expect(colors[0]).toBe(VIRIDIS256[0]);
    expect(colors[2]).toBe(VIRIDIS256[255]);
  });
});

describe('legendTicks', () => {
  it('spans min to max evenly', () => {
    expect(legendTicks(0, 8, 5)).toEqual([0, 2, 4, 6, 8]);
    expect(legendTicks(1, 1, 3)).toEqual([1, 1, 1]);
  });
});
