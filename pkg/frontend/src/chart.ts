// Time-series line chart rendered as an SVG string: x is time, y the sampled
// value. Pure string generation so the geometry is testable anywhere.

import type { TimeseriesPoint } from './api.js';

export interface ChartSpec {
  width: number;
  height: number;
  unit: string;
}

const MARGIN = { top: 12, right: 12, bottom: 22, left: 48 };

function esc(text: string): string {
  return text.replace(/&/g, '&amp;').replace(/</g, '&lt;').replace(/>/g, '&gt;');
}

export function plotTimeseries(points: TimeseriesPoint[], spec: ChartSpec): string {
  const { width, height, unit } = spec;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="ts-chart">`,
  ];
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(`<line class="axis" x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}"/>`);
  parts.push(`<line class="axis" x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}"/>`);
  parts.push(`<text class="axis-label" x="${x0 - 6}" y="${y1 + 4}" text-anchor="end">${esc(unit)}</text>`);

  if (points.length === 0) {
    parts.push(`<text class="no-data" x="${(x0 + x1) / 2}" y="${(y0 + y1) / 2}" text-anchor="middle">no data</text>`);
    parts.push('</svg>');
    return parts.join('');
  }

  const ts = points.map((p) => p.t_ns);
  const vs = points.map((p) => p.value);
  const tMin = Math.min(...ts);
  const tMax = Math.max(...ts);
  const vMin = Math.min(...vs);
  const vMax = Math.max(...vs);
  const tSpan = tMax - tMin || 1;
  const vSpan = vMax - vMin || 1;
  const px = (t: number) => x0 + ((t - tMin) / tSpan) * (x1 - x0);
  const py = (v: number) => y0 - ((v - vMin) / vSpan) * (y0 - y1);

  const vertices = points.map((p) => [px(p.t_ns), py(p.value)] as const);
  if (vertices.length > 1) {
    const d = vertices.map(([x, y], i) => `${i ? 'L' : 'M'}${x.toFixed(1)},${y.toFixed(1)}`).join(' ');
    parts.push(`<path class="series" d="${d}" fill="none"/>`);
  }
  for (const [x, y] of vertices) {
    parts.push(`<circle class="marker" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="2.5"/>`);
  }
  parts.push(`<text class="tick" x="${x0}" y="${y0 + 16}">${fmtTime(tMin)}</text>`);
  parts.push(`<text class="tick" x="${x1}" y="${y0 + 16}" text-anchor="end">${fmtTime(tMax)}</text>`);
  parts.push(`<text class="tick" x="${x0 - 6}" y="${y0}" text-anchor="end">${vMin.toPrecision(4)}</text>`);
  parts.push(`<text class="tick" x="${x0 - 6}" y="${y1 + 10}" text-anchor="end">${vMax.toPrecision(4)}</text>`);
  parts.push('</svg>');
  return parts.join('');
}

function fmtTime(tNs: number): string {
  const s = tNs / 1e9;
  return s >= 3600 ? `${(s / 3600).toFixed(2)}h` : `${s.toFixed(1)}s`;
}

export function countChartVertices(svg: string): number {
  return (svg.match(/<circle class="marker"/g) ?? []).length;
}

export function hasSeriesLine(svg: string): boolean {
  return svg.includes('<path class="series"');
}
