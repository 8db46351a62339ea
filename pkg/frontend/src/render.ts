/**
 * Pure SVG-string builders for the five panels. No DOM access here, so the
 * rendering layer is testable headlessly; app.ts injects the strings and
 * attaches delegated event handlers.
 */

import { legendTicks, valueToColor } from './color.js';
import { makeTransform } from './geometry.js';
import type { Point } from './geometry.js';
import type { VoronoiData } from './types.js';

const XMLNS = 'http://www.w3.org/2000/svg';

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function fmt(v: number): string {
  return v.toFixed(3);
}

export interface VoronoiRenderOptions {
  size?: number;
  highlight?: Map<number, string>; // site index -> selection color
  sampleIds?: string[];
  values?: number[]; // raw values for hover tooltips
}

/** The map panel: one polygon per cell, colored by the caller. */
export function renderVoronoiSvg(
  voro: VoronoiData,
  cellColors: string[],
  opts: VoronoiRenderOptions = {},
): string {
  const transform = makeTransform(voro.bbox, opts.size ?? 640);
  const parts = [
    `<svg xmlns="${XMLNS}" width="${fmt(transform.width)}" height="${fmt(transform.height)}" ` +
      `viewBox="0 0 ${fmt(transform.width)} ${fmt(transform.height)}" data-role="voronoi">`,
  ];
  voro.cells.forEach((cell, i) => {
    if (cell.length < 3) return;
    const pts = cell
      .map((p) => transform.toScreen(p as Point))
      .map(([x, y]) => `${fmt(x)},${fmt(y)}`)
      .join(' ');
    const stroke = opts.highlight?.get(i) ?? '#ffffff';
    const strokeWidth = opts.highlight?.has(i) ? '2.0' : '0.5';
    const title = opts.sampleIds
      ? `<title>${esc(opts.sampleIds[i])}${opts.values ? `: ${opts.values[i]}` : ''}</title>`
      : '';
    parts.push(
      `<polygon data-index="${i}" points="${pts}" fill="${cellColors[i]}" ` +
        `stroke="${stroke}" stroke-width="${strokeWidth}">${title}</polygon>`,
    );
  });
  voro.sites.forEach(([x, y], i) => {
    const [sx, sy] = transform.toScreen([x, y]);
    parts.push(
      `<circle data-site="${i}" cx="${fmt(sx)}" cy="${fmt(sy)}" r="1.2" fill="#000000"/>`,
    );
  });
  parts.push('</svg>');
  return parts.join('\n');
}

/** Horizontal color legend with min/max ticks for the active color mode. */
export function renderLegendSvg(min: number, max: number, width = 260, height = 34): string {
  const steps = 64;
  const barH = 12;
  const parts = [
    `<svg xmlns="${XMLNS}" width="${width}" height="${height}" data-role="legend">`,
  ];
  for (let i = 0; i < steps; i++) {
    const x = (i / steps) * width;
    parts.push(
      `<rect x="${fmt(x)}" y="0" width="${fmt(width / steps + 0.5)}" height="${barH}" ` +
        `fill="${valueToColor(i / (steps - 1))}"/>`,
    );
  }
  const ticks = legendTicks(min, max, 3);
  ticks.forEach((t, i) => {
    const anchor = i === 0 ? 'start' : i === ticks.length - 1 ? 'end' : 'middle';
    const x = (i / (ticks.length - 1)) * width;
    parts.push(
      `<text x="${fmt(x)}" y="${height - 6}" font-size="10" text-anchor="${anchor}">` +
        `${esc(t.toPrecision(4))}</text>`,
    );
  });
  parts.push('</svg>');
  return parts.join('\n');
}

export interface BarChartOptions {
  width?: number;
  height?: number;
  /** 0-based index of a draggable marker shown after this many bars
   * (the variance panel's selected-component marker). */
  markerAfter?: number;
  colors?: string[];
  baselineAtZero?: boolean;
}

/**
 * Vertical bar chart used by the variance, loadings and comparison panels.
 * Bars carry data-bar indices; the optional marker carries data-role=marker.
 */
export function renderBarChartSvg(
  values: number[],
  labels: string[],
  opts: BarChartOptions = {},
): string {
  const width = opts.width ?? 420;
  const height = opts.height ?? 180;
  const padTop = 6;
  const padBottom = 26;
  const innerH = height - padTop - padBottom;
  const n = values.length;
  const slot = n > 0 ? width / n : width;
  const barW = Math.max(slot * 0.72, 1);

  const lo = Math.min(0, ...values);
  const hi = Math.max(0, ...values);
  const span = hi - lo || 1;
  const yOf = (v: number) => padTop + ((hi - v) / span) * innerH;
  const zeroY = yOf(0);

  const parts = [
    `<svg xmlns="${XMLNS}" width="${width}" height="${height}" data-role="bar-chart">`,
    `<line x1="0" y1="${fmt(zeroY)}" x2="${width}" y2="${fmt(zeroY)}" stroke="#888" stroke-width="0.7"/>`,
  ];
  values.forEach((v, i) => {
    const x = i * slot + (slot - barW) / 2;
    const y = Math.min(yOf(v), zeroY);
    const h = Math.abs(yOf(v) - zeroY);
    const fill = opts.colors?.[i] ?? '#4878b0';
    parts.push(
      `<rect data-bar="${i}" x="${fmt(x)}" y="${fmt(y)}" width="${fmt(barW)}" ` +
        `height="${fmt(h)}" fill="${fill}"><title>${esc(labels[i] ?? String(i))}: ${v}</title></rect>`,
    );
    if (n <= 30) {
      parts.push(
        `<text x="${fmt(x + barW / 2)}" y="${height - 8}" font-size="9" ` +
          `text-anchor="middle">${esc(labels[i] ?? String(i))}</text>`,
      );
    }
  });
  if (opts.markerAfter !== undefined && n > 0) {
    const x = Math.min(opts.markerAfter + 1, n) * slot;
    parts.push(
      `<line data-role="marker" x1="${fmt(x)}" y1="0" x2="${fmt(x)}" y2="${height}" ` +
        `stroke="#d62728" stroke-width="2.5" cursor="ew-resize"/>`,
    );
  }
  parts.push('</svg>');
  return parts.join('\n');
}

/** Overlaid per-selection histograms on shared bin edges. */
export function renderHistogramSvg(
  edges: number[],
  counts: Record<string, number[]>,
  colors: Record<string, string>,
  width = 420,
  height = 160,
): string {
  const names = Object.keys(counts);
  const maxCount = Math.max(1, ...names.flatMap((n) => counts[n]));
  const nBins = edges.length - 1;
  const slot = width / Math.max(nBins, 1);
  const padBottom = 18;
  const innerH = height - padBottom;

  const parts = [
    `<svg xmlns="${XMLNS}" width="${width}" height="${height}" data-role="histogram">`,
  ];
  names.forEach((name) => {
    counts[name].forEach((c, i) => {
      const h = (c / maxCount) * innerH;
      parts.push(
        `<rect data-series="${esc(name)}" data-bin="${i}" x="${fmt(i * slot)}" ` +
          `y="${fmt(innerH - h)}" width="${fmt(slot)}" height="${fmt(h)}" ` +
          `fill="${colors[name] ?? '#777777'}" fill-opacity="0.45"/>`,
      );
    });
  });
  parts.push(
    `<text x="0" y="${height - 4}" font-size="10">${esc(edges[0].toPrecision(4))}</text>`,
    `<text x="${width}" y="${height - 4}" font-size="10" text-anchor="end">` +
      `${esc(edges[edges.length - 1].toPrecision(4))}</text>`,
    '</svg>',
  );
  return parts.join('\n');
}

/** Which bar index is tallest (by |value|); the comparison headline. */
export function tallestBar(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (Math.abs(values[i]) > Math.abs(values[best])) best = i;
  }
  return best;
}
