/** Figure builders: 1D profiles, 2D colored contours, contour lines
 *  (marching squares on the reconstructed node grid), y-cuts, and
 *  sweep/table curves. All return SVG strings. */

import { GridField, SnapshotFrame, cutAlongY, nodeValues, toGrid } from "./snapshot.js";
import { column } from "./csv.js";
import { Extent, Figure, colormap, ticks } from "./svg.js";

function finite(v: number[]): number[] {
  return v.filter((x) => Number.isFinite(x));
}

function extentOf(xs: number[], vs: number[], padFrac = 0.05): Extent {
  const xmin = Math.min(...xs);
  const xmax = Math.max(...xs);
  const fv = finite(vs);
  let vmin = Math.min(...fv);
  let vmax = Math.max(...fv);
  if (vmin === vmax) {
    vmin -= 0.5;
    vmax += 0.5;
  }
  const pad = padFrac * (vmax - vmin);
  return { xmin, xmax, ymin: vmin - pad, ymax: vmax + pad };
}

export function plotProfile(frame: SnapshotFrame, variable: string): string {
  const x = column(frame.table, "x");
  const v = nodeValues(frame, variable);
  const pairs = x.map((xi, i) => [xi, v[i]] as [number, number]).sort((a, b) => a[0] - b[0]);
  const fig = new Figure(extentOf(x, v), `${variable} profile`, "x", variable);
  fig.polyline(pairs, "#1f5fa8", 1.2);
  for (const [px, pv] of pairs) {
    fig.marker(px, pv);
  }
  return fig.render();
}

export function plotCut(frame: SnapshotFrame, variable: string, yValue: number): string {
  const { row, points } = cutAlongY(frame, variable, yValue);
  const xs = points.map((p) => p[0]);
  const vs = points.map((p) => p[1]);
  const fig = new Figure(extentOf(xs, vs), `${variable} along y=${row.toPrecision(3)}`, "x", variable);
  fig.polyline(points, "#a83232", 1.4);
  return fig.render();
}

export function plotColoredContour(frame: SnapshotFrame, variable: string): string {
  const grid = toGrid(frame, variable);
  const fv = finite(grid.values.flat());
  const vmin = Math.min(...fv);
  const vmax = Math.max(...fv);
  const span = vmax - vmin || 1;
  const ext: Extent = {
    xmin: Math.min(...grid.xs),
    xmax: Math.max(...grid.xs),
    ymin: Math.min(...grid.ys),
    ymax: Math.max(...grid.ys),
  };
  const fig = new Figure(ext, `Colored contour of ${variable}`, "x", "y");
  const xedges = edges(grid.xs);
  const yedges = edges(grid.ys);
  for (let i = 0; i < grid.xs.length; i++) {
    for (let j = 0; j < grid.ys.length; j++) {
      const v = grid.values[i][j];
      if (!Number.isFinite(v)) continue;
      fig.cell(xedges[i], xedges[i + 1], yedges[j], yedges[j + 1], colormap((v - vmin) / span));
    }
  }
  fig.text(8, 30, `min ${vmin.toPrecision(3)}  max ${vmax.toPrecision(3)}`, 10);
  return fig.render();
}

export function plotContourLines(frame: SnapshotFrame, variable: string, nLevels = 12): string {
  const grid = toGrid(frame, variable);
  const fv = finite(grid.values.flat());
  const vmin = Math.min(...fv);
  const vmax = Math.max(...fv);
  const ext: Extent = {
    xmin: Math.min(...grid.xs),
    xmax: Math.max(...grid.xs),
    ymin: Math.min(...grid.ys),
    ymax: Math.max(...grid.ys),
  };
  const fig = new Figure(ext, `Contour lines of ${variable}`, "x", "y");
  const levels = ticks(vmin, vmax, nLevels);
  for (const level of levels) {
    for (const [x0, y0, x1, y1] of marchingSquares(grid, level)) {
      fig.segment(x0, y0, x1, y1, "#20435c", 0.9);
    }
  }
  return fig.render();
}

export interface SweepRow {
  s: number;
  error: number;
}

export function plotSweepCurve(rows: SweepRow[], scheme: string): string {
  const pts = rows
    .filter((r) => Number.isFinite(r.error) && r.error > 0)
    .map((r) => [r.s, Math.log10(r.error)] as [number, number])
    .sort((a, b) => a[0] - b[0]);
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const fig = new Figure(extentOf(xs, ys, 0.1), `${scheme}: error vs sigma exponent`, "s", "log10(error)");
  fig.polyline(pts, "#1f5fa8", 1.5);
  for (const [x, y] of pts) fig.marker(x, y);
  return fig.render();
}

function edges(axis: number[]): number[] {
  const out = [axis[0] - (axis[1] - axis[0]) / 2];
  for (let i = 0; i < axis.length - 1; i++) {
    out.push((axis[i] + axis[i + 1]) / 2);
  }
  out.push(axis[axis.length - 1] + (axis[axis.length - 1] - axis[axis.length - 2]) / 2);
  return out;
}

/** Standard marching squares: returns line segments of the iso-level on
 *  the node grid; cells touching NaN nodes (blocked regions) are skipped. */
export function marchingSquares(grid: GridField, level: number): Array<[number, number, number, number]> {
  const segs: Array<[number, number, number, number]> = [];
  const { xs, ys, values } = grid;
  for (let i = 0; i < xs.length - 1; i++) {
    for (let j = 0; j < ys.length - 1; j++) {
      const v00 = values[i][j];
      const v10 = values[i + 1][j];
      const v11 = values[i + 1][j + 1];
      const v01 = values[i][j + 1];
      if (![v00, v10, v11, v01].every(Number.isFinite)) continue;
      let idx = 0;
      if (v00 > level) idx |= 1;
      if (v10 > level) idx |= 2;
      if (v11 > level) idx |= 4;
      if (v01 > level) idx |= 8;
      if (idx === 0 || idx === 15) continue;
      const bottom = (): [number, number] => [interp(xs[i], xs[i + 1], v00, v10, level), ys[j]];
      const right = (): [number, number] => [xs[i + 1], interp(ys[j], ys[j + 1], v10, v11, level)];
      const top = (): [number, number] => [interp(xs[i], xs[i + 1], v01, v11, level), ys[j + 1]];
      const left = (): [number, number] => [xs[i], interp(ys[j], ys[j + 1], v00, v01, level)];
      const pairs: Array<[[number, number], [number, number]]> = [];
      switch (idx) {
        case 1: case 14: pairs.push([left(), bottom()]); break;
        case 2: case 13: pairs.push([bottom(), right()]); break;
        case 3: case 12: pairs.push([left(), right()]); break;
        case 4: case 11: pairs.push([right(), top()]); break;
        case 5: pairs.push([left(), top()], [bottom(), right()]); break;
        case 6: case 9: pairs.push([bottom(), top()]); break;
        case 7: case 8: pairs.push([left(), top()]); break;
        case 10: pairs.push([left(), bottom()], [right(), top()]); break;
      }
      for (const [[ax, ay], [bx, by]] of pairs) {
        segs.push([ax, ay, bx, by]);
      }
    }
  }
  return segs;
}

function interp(a: number, b: number, va: number, vb: number, level: number): number {
  const t = vb === va ? 0.5 : (level - va) / (vb - va);
  return a + Math.min(1, Math.max(0, t)) * (b - a);
}
